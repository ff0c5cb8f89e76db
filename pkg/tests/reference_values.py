"""Printed truth values for the three simulation scenarios.

Each row is (C median, Rx median, Rx/C, Rx-C, subgroup HR or None), with the
number of printed decimals per column.
"""

ROWS = {
    "a": {"g_minus": (37.3, 25.0, 0.67, -12.3, 1.65),
          "g_plus": (83.0, 123.8, 1.5, 40.8, 0.61),
          "mixture": (54.0, 49.4, 0.9, -4.6, None)},
    "b": {"g_minus": (37.3, 40.0, 1.1, 2.7, 0.90),
          "g_plus": (55.6, 89.9, 1.6, 34.3, 0.55),
          "mixture": (45.2, 58.5, 1.3, 13.3, None)},
    "c": {"g_minus": (37.3, 55.6, 1.5, 18.3, 0.61),
          "g_plus": (83.0, 123.8, 1.5, 40.8, 0.61),
          "mixture": (54.0, 80.5, 1.5, 26.5, None)},
}

DECIMALS = {
    ("a", "g_minus"): (1, 1, 2, 1, 2), ("a", "g_plus"): (1, 1, 1, 1, 2),
    ("a", "mixture"): (1, 1, 1, 1, None),
    ("b", "g_minus"): (1, 1, 1, 1, 2), ("b", "g_plus"): (1, 1, 1, 1, 2),
    ("b", "mixture"): (1, 1, 1, 1, None),
    ("c", "g_minus"): (1, 1, 1, 1, 2), ("c", "g_plus"): (1, 1, 1, 1, 2),
    ("c", "mixture"): (1, 1, 1, 1, None),
}

#: Printed cells inconsistent with the stated model parameters
#: (lam=50, k=1.25, beta1=-0.1 gives an Rx g- median of 40.40).
ERRATA = {("b", "g_minus", 1), ("b", "g_minus", 3)}

COLUMNS = ("C", "Rx", "ratio", "difference", "hr")
