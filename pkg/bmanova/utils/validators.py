import math


def _is_int(value):
    return isinstance(value, int) and not isinstance(value, bool)


def _is_real(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def validate_manova_params(m, n, p, beta, omega):
    """Validate an (m, n, p, beta, omega) parameter set"""
    errors = []

    for label, value in (("m", m), ("n", n), ("p", p)):
        if not _is_int(value) or value < 1:
            errors.append(f"{label} must be a positive integer (got {value!r})")

    if not _is_real(beta) or beta <= 0:
        errors.append(f"beta must be a positive real (got {beta!r})")

    if _is_int(m) and _is_int(n) and m < n:
        errors.append(f"m must be at least n (got m={m}, n={n})")
    if _is_int(p) and _is_int(n) and p < n:
        errors.append(f"p must be at least n (got p={p}, n={n})")

    try:
        omega = list(omega)
    except TypeError:
        errors.append("omega must be a list of positive reals")
        omega = None
    if omega is not None:
        if _is_int(n) and len(omega) != n:
            errors.append(f"omega must have exactly n={n} entries (got {len(omega)})")
        if not all(_is_real(w) and w > 0 for w in omega):
            errors.append("omega entries must be positive finite reals")

    return len(errors) == 0, "; ".join(errors)


def validate_grid(start, step, stop):
    """Validate a START:STEP:STOP evaluation grid inside (0, 1)"""
    errors = []

    if not all(_is_real(v) for v in (start, step, stop)):
        errors.append("grid start, step and stop must be finite reals")
        return False, "; ".join(errors)
    if step <= 0:
        errors.append(f"grid step must be positive (got {step})")
    if not 0 < start < 1:
        errors.append(f"grid start must lie in (0, 1) (got {start})")
    if not 0 < stop < 1:
        errors.append(f"grid stop must lie in (0, 1) (got {stop})")
    if start > stop:
        errors.append(f"grid start must not exceed stop (got {start} > {stop})")

    return len(errors) == 0, "; ".join(errors)


def validate_experiment_config(data):
    """Validate an experiment config document before running it"""
    errors = []

    if not isinstance(data, dict):
        return False, "config must be a JSON object"

    required_fields = ['m', 'n', 'p', 'beta', 'omega', 'n_samples', 'seed', 'grid', 'alpha']
    for field in required_fields:
        if field not in data:
            errors.append(f"{field} is required")
    if errors:
        return False, "; ".join(errors)

    ok, message = validate_manova_params(data['m'], data['n'], data['p'], data['beta'], data['omega'])
    if not ok:
        errors.append(message)

    if not _is_int(data['n_samples']) or data['n_samples'] < 1:
        errors.append(f"n_samples must be a positive integer (got {data['n_samples']!r})")
    if not _is_int(data['seed']) or not 0 <= data['seed'] < 2 ** 64:
        errors.append(f"seed must be an integer in [0, 2^64) (got {data['seed']!r})")
    if not _is_real(data['alpha']) or not 0 < data['alpha'] < 1:
        errors.append(f"alpha must lie in (0, 1) (got {data['alpha']!r})")

    grid = data['grid']
    if not isinstance(grid, dict) or not all(k in grid for k in ('start', 'step', 'stop')):
        errors.append("grid must be an object with start, step and stop")
    else:
        ok, message = validate_grid(grid['start'], grid['step'], grid['stop'])
        if not ok:
            errors.append(message)

    analytic = data.get('analytic')
    if analytic is not None:
        if not isinstance(analytic, dict):
            errors.append("analytic must be an object")
        else:
            unknown = set(analytic) - {'m', 'p', 'beta', 'omega'}
            if unknown:
                errors.append(f"analytic may only override m, p, beta, omega (got {sorted(unknown)})")
            merged = {k: analytic.get(k, data[k]) for k in ('m', 'n', 'p', 'beta', 'omega')}
            ok, message = validate_manova_params(**merged)
            if not ok:
                errors.append(f"analytic: {message}")

    if 'output_dir' in data and not isinstance(data['output_dir'], str):
        errors.append("output_dir must be a string")

    return len(errors) == 0, "; ".join(errors)
