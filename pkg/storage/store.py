# Storage module for per-episode evaluation logs
import os

import duckdb
import pandas as pd

EPISODE_FIELDS = ["task", "mode", "seed", "dist", "episode_seed", "success", "steps"]


class EpisodeStore:
    """
    DuckDB-backed store of evaluation episodes, one row per rollout, so
    report tables are SQL aggregations over the raw logs.
    """

    def __init__(self, db_path=":memory:"):
        """Open (or create) the database"""
        db_dir = os.path.dirname(db_path) if db_path != ":memory:" else ""
        if db_dir:
            os.makedirs(db_dir, exist_ok=True)

        self.db_path = db_path
        self.conn = duckdb.connect(db_path, read_only=False)
        self._create_tables()

    def _create_tables(self):
        self.conn.execute("""
            CREATE TABLE IF NOT EXISTS episodes (
                task VARCHAR,
                mode VARCHAR,
                seed INTEGER,
                dist VARCHAR,
                episode_seed BIGINT,
                success BOOLEAN,
                steps INTEGER
            )
        """)

    def insert_episodes(self, task: str, mode: str, seed: int, episodes: pd.DataFrame):
        """Insert the per-episode log of one (task, mode, seed) cell"""
        if episodes.empty:
            return
        df = pd.DataFrame({
            "task": task,
            "mode": mode,
            "seed": int(seed),
            "dist": episodes["dist"].astype(str),
            "episode_seed": episodes["seed"].astype("int64"),
            "success": episodes["success"].astype(bool),
            "steps": episodes["steps"].astype("int64"),
        })[EPISODE_FIELDS]
        self.conn.register("incoming", df)
        self.conn.execute("INSERT INTO episodes SELECT * FROM incoming")
        self.conn.unregister("incoming")

    def get_episodes(self, mode=None, dist=None):
        """Query episodes with optional filters"""
        query = "SELECT * FROM episodes WHERE 1=1"
        params = []
        if mode:
            query += " AND mode = ?"
            params.append(mode)
        if dist:
            query += " AND dist = ?"
            params.append(dist)
        query += " ORDER BY task, mode, seed, dist, episode_seed"
        return self.conn.execute(query, params).df()

    def seed_rates(self):
        """Success rate and counts per (task, mode, seed, dist) cell"""
        return self.conn.execute("""
            SELECT task, mode, seed, dist,
                   AVG(CAST(success AS DOUBLE)) AS success_rate,
                   SUM(CAST(success AS INTEGER)) AS successes,
                   COUNT(*) AS episodes,
                   AVG(CAST(steps AS DOUBLE)) AS mean_steps
            FROM episodes
            GROUP BY task, mode, seed, dist
            ORDER BY task, mode, seed, dist
        """).df()

    def pooled_counts(self):
        """Successes and episodes per (task, mode, dist), pooled over seeds"""
        return self.conn.execute("""
            SELECT task, mode, dist,
                   SUM(CAST(success AS INTEGER)) AS successes,
                   COUNT(*) AS episodes
            FROM episodes
            GROUP BY task, mode, dist
            ORDER BY task, mode, dist
        """).df()

    def get_modes(self):
        result = self.conn.execute("SELECT DISTINCT mode FROM episodes ORDER BY mode").fetchall()
        return [row[0] for row in result]

    def close(self):
        self.conn.close()
