# Summary statistics for experiment reports
