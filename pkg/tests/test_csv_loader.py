import logging

import numpy as np
import pandas as pd
import pytest

from src.errors import DataValidationError, SchemaError
from src.extractors.csv_loader import load_csv, write_table_csv


def _write(path, frame):
    frame.to_csv(path, index=False)
    return path


@pytest.fixture
def plain_frame(small_table):
    frame = small_table.frame
    return pd.DataFrame({"S": frame["s"], "A": frame["a"], "W": frame["w"], "R": frame["r"],
                         "C": frame["c_obs"], "Y": frame["y"]})


def test_round_trip_keeps_truth(masked_table, tmp_path):
    path = write_table_csv(masked_table, tmp_path / "data.csv", keep_truth=True)
    loaded = load_csv(path)
    assert loaded == masked_table
    assert loaded.has_truth


def test_round_trip_without_truth(masked_table, tmp_path):
    loaded = load_csv(write_table_csv(masked_table, tmp_path / "data.csv"))
    assert not loaded.has_truth
    np.testing.assert_array_equal(loaded.m, masked_table.m)
    assert "C_TRUE" not in pd.read_csv(tmp_path / "data.csv").columns


def test_blank_mediator_is_unobserved(plain_frame, tmp_path):
    plain_frame.loc[[1005, 1010], "C"] = np.nan
    table = load_csv(_write(tmp_path / "data.csv", plain_frame))
    assert table.m[1005] == 0 and table.m[1010] == 0
    assert np.isnan(table.c_obs[1005])
    assert table.m.sum() == len(table) - 2


def test_lowercase_headers(plain_frame, tmp_path):
    table = load_csv(_write(tmp_path / "data.csv", plain_frame.rename(columns=str.lower)))
    np.testing.assert_array_equal(table.y, plain_frame["Y"].to_numpy())


def test_missing_column(plain_frame, tmp_path):
    with pytest.raises(SchemaError) as error:
        load_csv(_write(tmp_path / "data.csv", plain_frame.drop(columns=["R"])))
    assert "missing required column: R" in str(error.value)


def test_non_numeric_cell_reports_line(plain_frame, tmp_path):
    plain_frame["R"] = plain_frame["R"].astype(object)
    plain_frame.loc[7, "R"] = "abc"
    with pytest.raises(DataValidationError) as error:
        load_csv(_write(tmp_path / "data.csv", plain_frame))
    assert error.value.line_number == 9


def test_empty_required_cell_reports_line(plain_frame, tmp_path):
    plain_frame.loc[12, "R"] = np.nan
    with pytest.raises(DataValidationError) as error:
        load_csv(_write(tmp_path / "data.csv", plain_frame))
    assert error.value.line_number == 14


def test_infinite_mediator_rejected(plain_frame, tmp_path):
    plain_frame["C"] = plain_frame["C"].astype(object)
    plain_frame.loc[20, "C"] = "inf"
    with pytest.raises(DataValidationError) as error:
        load_csv(_write(tmp_path / "data.csv", plain_frame))
    assert error.value.line_number == 22


def test_padded_numbers_parse(plain_frame, tmp_path):
    plain_frame["R"] = [" {!r} ".format(float(v)) for v in plain_frame["R"]]
    table = load_csv(_write(tmp_path / "data.csv", plain_frame))
    np.testing.assert_allclose(table.r, [float(v) for v in plain_frame["R"]])


def test_non_binary_treatment(plain_frame, tmp_path):
    plain_frame.loc[3, "A"] = 2
    with pytest.raises(DataValidationError) as error:
        load_csv(_write(tmp_path / "data.csv", plain_frame))
    assert error.value.line_number == 5


def test_indicator_conflicts_with_blank_mediator(plain_frame, tmp_path):
    plain_frame["M"] = 1
    plain_frame.loc[2, "C"] = np.nan
    with pytest.raises(DataValidationError):
        load_csv(_write(tmp_path / "data.csv", plain_frame))


def test_indicator_hides_mediator(plain_frame, tmp_path):
    plain_frame["M"] = 1
    plain_frame.loc[1002, "M"] = 0
    table = load_csv(_write(tmp_path / "data.csv", plain_frame))
    assert table.m[1002] == 0
    assert np.isnan(table.c_obs[1002])


def test_tiny_stratum_rejected(plain_frame, tmp_path):
    frame = plain_frame[~((plain_frame["S"] == 0) & (plain_frame["W"] == 1))]
    with pytest.raises(DataValidationError):
        load_csv(_write(tmp_path / "data.csv", frame))


def test_small_stratum_warns(plain_frame, tmp_path, caplog):
    target_w1 = plain_frame.index[(plain_frame["S"] == 0) & (plain_frame["W"] == 1)]
    frame = plain_frame.drop(index=target_w1[20:])
    with caplog.at_level(logging.WARNING, logger="src.extractors.csv_loader"):
        load_csv(_write(tmp_path / "data.csv", frame))
    assert "S=0, W=1" in caplog.text


def test_unreadable_file(tmp_path):
    with pytest.raises(SchemaError):
        load_csv(tmp_path / "absent.csv")
