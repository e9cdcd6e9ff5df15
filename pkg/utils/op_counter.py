import logging
from pathlib import Path

from utils.config import OUTPUT_DIR

logger = logging.getLogger("LDGCN")


class OpCounter:
    """A class to track the multiply-add cost of sparse and dense products."""

    def __init__(self, run_timestamp=None):
        self.run_timestamp = run_timestamp
        self.sparse_madds = 0
        self.dense_madds = 0
        self.sparse_calls = 0
        self.dense_calls = 0

    @property
    def total(self):
        return self.sparse_madds + self.dense_madds

    def reset(self):
        self.sparse_madds = 0
        self.dense_madds = 0
        self.sparse_calls = 0
        self.dense_calls = 0

    def track_sparse(self, nnz, cols):
        """One sparse-times-dense product costs nnz * cols multiply-adds."""
        self.sparse_madds += nnz * cols
        self.sparse_calls += 1

    def track_dense(self, rows, inner, cols):
        self.dense_madds += rows * inner * cols
        self.dense_calls += 1

    def get_summary(self):
        """Generates a summary of the multiply-adds spent so far."""
        return (
            f"--- Multiply-Add Summary ---\n"
            f"Sparse products: {self.sparse_calls} ({self.sparse_madds} multiply-adds)\n"
            f"Dense products: {self.dense_calls} ({self.dense_madds} multiply-adds)\n"
            f"Total multiply-adds: {self.total}\n"
            f"----------------------------\n"
        )

    def log_summary(self):
        logger.info("\n" + self.get_summary())

    def save_summary_to_file(self):
        """Saves the summary to a text file."""
        output_dir = Path(OUTPUT_DIR)
        output_dir.mkdir(parents=True, exist_ok=True)
        filename = output_dir / f"madds_{self.run_timestamp}.txt"
        with open(filename, "w", encoding="utf-8") as f:
            f.write(self.get_summary())
        logger.info(f"Multiply-add summary saved to {filename}")
        return filename
