import numpy as np
import pytest

from illiqcorr.exceptions import InputFileNotFound, InsufficientData, ParseError
from illiqcorr.io import read_series_csv


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_returns_with_dates(tmp_path):
    p = write(tmp_path, "date,return\n2020-01-01,0.01\n2020-01-02,0\n2020-01-03,-0.02\n")
    s = read_series_csv(p)
    assert s.returns.tolist() == [0.01, 0.0, -0.02]
    assert s.dates == ("2020-01-01", "2020-01-02", "2020-01-03")
    assert s.column == "return"


def test_prices_drop_first_row(tmp_path):
    p = write(tmp_path, "date,Price\nd1,100\nd2,100\nd3,110\n")
    s = read_series_csv(p, "price")
    assert s.returns[0] == 0.0 and s.returns[1] == pytest.approx(np.log(1.1))
    assert s.dates == ("d2", "d3")


def test_column_override_and_simulator_layout(tmp_path):
    p = write(tmp_path, "t,latent,observed,a,true_prob\n1,0.5,0.5,1,0.45\n2,0.1,0.0,0,0.45\n")
    assert read_series_csv(p).returns.tolist() == [0.5, 0.0]
    assert read_series_csv(p, column="latent").returns.tolist() == [0.5, 0.1]


def test_parse_error_reports_row_and_column(tmp_path):
    p = write(tmp_path, "return\n0.1\nabc\n")
    with pytest.raises(ParseError) as e:
        read_series_csv(p)
    assert e.value.row == 3 and e.value.column == "return"
    assert "row 3" in str(e.value)


@pytest.mark.parametrize(
    "text, kind",
    [("x,y\n1,2\n", "return"), ("", "return"), ("price\n1\n-2\n", "price"), ("return\nnan\n", "return")],
)
def test_bad_files(tmp_path, text, kind):
    with pytest.raises(ParseError):
        read_series_csv(write(tmp_path, text), kind)


def test_missing_file(tmp_path):
    with pytest.raises(InputFileNotFound):
        read_series_csv(tmp_path / "nope.csv")


def test_single_price(tmp_path):
    with pytest.raises(InsufficientData):
        read_series_csv(write(tmp_path, "price\n5\n"), "price")
