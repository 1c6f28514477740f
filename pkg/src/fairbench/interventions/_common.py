from __future__ import annotations

import numpy as np


class InterventionError(ValueError):
    pass


def check_binary_sensitive(sensitive, n: int, allow_single: bool = False) -> np.ndarray:
    s = np.asarray(sensitive)
    if len(s) != n:
        raise InterventionError("sensitive vector length does not match X")
    try:
        codes = s.astype(float)
    except (TypeError, ValueError):
        raise InterventionError("sensitive attribute must be binary 0/1") from None
    if not np.all((codes == 0) | (codes == 1)):
        raise InterventionError("sensitive attribute must be binary 0/1")
    codes = codes.astype(np.int64)
    if not allow_single and (codes.min() == codes.max()):
        raise InterventionError("both sensitive groups must be present")
    return codes
