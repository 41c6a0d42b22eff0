import math


def safeguarded_newton(func, lo: float, hi: float, tol: float = 1e-14, max_iter: int = 100) -> float:
    """Find the root of ``func`` bracketed by ``[lo, hi]`` using Newton
    steps that fall back to bisection.

    ``func(x)`` returns ``(f, df)``. The bracket is kept throughout, so a
    vanishing derivative (e.g. at the end of a monotone table) only costs
    bisection steps.

    Examples
    --------
    >>> round(safeguarded_newton(lambda x: (x * x - 2.0, 2.0 * x), 0.0, 2.0), 12)
    1.414213562373
    """
    f_lo, _ = func(lo)
    f_hi, _ = func(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi > 0:
        raise ValueError(f"Root is not bracketed: f({lo})={f_lo}, f({hi})={f_hi}")
    # Orient so that f(x_lo) < 0
    if f_lo > 0:
        lo, hi = hi, lo
    x = 0.5 * (lo + hi)
    dx_old = abs(hi - lo)
    dx = dx_old
    f, df = func(x)
    for _ in range(max_iter):
        if f == 0.0:
            return x
        # Bisect if Newton out of range or not decreasing fast enough
        if ((x - hi) * df - f) * ((x - lo) * df - f) > 0.0 or abs(2.0 * f) > abs(dx_old * df):
            dx_old = dx
            dx = 0.5 * (hi - lo)
            x = lo + dx
        else:
            dx_old = dx
            dx = f / df
            x = x - dx
        if abs(dx) < tol:
            return x
        f, df = func(x)
        if f < 0.0:
            lo = x
        else:
            hi = x
        if math.isclose(lo, hi, rel_tol=0.0, abs_tol=tol):
            return 0.5 * (lo + hi)
    return x
