from src.extractors.csv_loader import load_csv, write_table_csv
from src.extractors.observation_table import ObservationTable

__all__ = ["load_csv", "write_table_csv", "ObservationTable"]
