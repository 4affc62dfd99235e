import numpy as np
import pytest

FIG1_A1 = [0.0, 0.8, 1.9, 2.9, 6.8, 7.5, 8.2, 9.0]
FIG1_A2 = [5.8, 4.6, 3.8, 3.2, 3.0, 4.1, 4.8, 5.5]

FIG1_CSV = "A1,A2\n" + "".join(f"{a},{b}\n" for a, b in zip(FIG1_A1, FIG1_A2)) + "5,\n"


@pytest.fixture
def fig1_r():
    return np.column_stack([FIG1_A1, FIG1_A2])


@pytest.fixture
def fig1_x():
    """The eight complete tuples plus t_x = (5, ?)."""
    return np.vstack([np.column_stack([FIG1_A1, FIG1_A2]), [5.0, np.nan]])


@pytest.fixture
def fig1_csv(tmp_path):
    p = tmp_path / "fig1.csv"
    p.write_text(FIG1_CSV)
    return p
