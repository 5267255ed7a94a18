import math

import pytest

from nvwire.errors import FileFormatError
from nvwire.io import fmt, parse_complex, read_csv, read_key_values, write_csv, write_key_values


def test_fmt():
    assert fmt(3.14159265) == "3.14159"
    assert fmt(2.8176 + 0.0176j) == "2.8176+0.0176j"
    assert fmt(1 - 2j, 3) == "1-2j"


@pytest.mark.parametrize("text, value", [("-20.4+1.3i", -20.4 + 1.3j), ("2+0i", 2 + 0j),
                                         ("-20.4+1.3j", -20.4 + 1.3j), ("5", 5 + 0j),
                                         ("1+i", 1 + 1j)])
def test_parse_complex(text, value):
    assert parse_complex(text) == value


def test_csv_round_trip(tmp_path):
    p = tmp_path / "x.csv"
    rows = [(repr(0.1), repr(math.pi)), (repr(1e-300), repr(-2.5))]
    write_csv(p, ("a", "b"), rows)
    a, b = read_csv(p, ("a", "b"), (float, float))
    assert a == [0.1, 1e-300] and b == [math.pi, -2.5]


def test_csv_errors(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n1,2\n3\n")
    with pytest.raises(FileFormatError, match=r"x\.csv:3:"):
        read_csv(p, ("a", "b"), (float, float))
    p.write_text("a,c\n")
    with pytest.raises(FileFormatError, match=":1:"):
        read_csv(p, ("a", "b"), (float, float))
    p.write_text("")
    with pytest.raises(FileFormatError):
        read_csv(p, ("a", "b"), (float, float))
    with pytest.raises(FileFormatError) as info:
        read_csv(tmp_path / "missing.csv", ("a",), (float,))
    assert info.value.exit_code == 4


def test_key_values(tmp_path):
    p = tmp_path / "c.conf"
    write_key_values(p, {"a": 1, "b-c": "x y"})
    assert read_key_values(p) == {"a": "1", "b-c": "x y"}
    p.write_text("# comment\nwavelength-nm = 650  # trailing\n\nbogus\n")
    with pytest.raises(FileFormatError, match=":4:"):
        read_key_values(p)
