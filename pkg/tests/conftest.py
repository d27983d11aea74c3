import numpy as np
import pytest

from advgame import ClassifierSet, LinearClassifier


@pytest.fixture
def axis_pair():
    """Two orthogonal-feature binary models, a point they both classify as 0.

    Margins at x=(1,1) are 1.0 for each member; the cheapest attack fooling
    both lies at the corner (-1,-1), cost sqrt(2).
    """
    c1 = LinearClassifier.from_binary(np.array([1.0, 0.0]), 0.0)
    c2 = LinearClassifier.from_binary(np.array([0.0, 1.0]), 0.0)
    return ClassifierSet([c1, c2]), np.array([1.0, 1.0]), 0
