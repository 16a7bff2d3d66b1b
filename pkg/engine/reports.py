"""JSON-ready reports shared by the command line and the HTTP API."""

from .errors import SplitError
from .poly import generator_names, poisson_bracket
from .reduction import (DEFAULT_MAX_DEGREE, collective_form, isotropy_check,
                        reduced_dynamics, split_hamiltonian, stratum_check,
                        verify_closure, verify_invariant_descent)
from .systems import BUILTIN_NAMES, SystemSpec, builtin


def parameters(spec: SystemSpec) -> dict:
    """Exact parameter values as strings ("1/2")."""
    return {name: str(value) for name, value in spec.parameters.items()}


def _check(name: str, status: str, **details) -> dict:
    return {'name': name, 'status': status, **details}


def verification_report(spec: SystemSpec, max_degree: int = DEFAULT_MAX_DEGREE) -> dict:
    """Every exact and sampled check of the reduction hypotheses for one system."""
    closure = verify_closure(spec, max_degree)
    names = list(spec.coordinate_names)
    m = len(spec.momentum)
    checks = []

    pairs = []
    table = spec.group.momentum_bracket_table(list(spec.momentum))
    for (a, b), expected in table.items():
        got = poisson_bracket(spec.momentum[a], spec.momentum[b])
        pairs.append({'pair': f"j{a + 1},j{b + 1}", 'bracket': got.to_string(names),
                      'expected': expected.to_string(names),
                      'status': 'pass' if got == expected else 'fail'})
    checks.append(_check('bracket-table', 'pass' if all(p['status'] == 'pass' for p in pairs) else 'fail',
                         pairs=pairs))

    checks.append(_check('closure', closure.verdict, **closure.to_dict()))

    displayed = [e for e in closure.entries if e.displayed is not None]
    if displayed:
        status = 'pass' if all(e.displayed_matches for e in displayed) else 'fail'
        checks.append(_check('displayed-forms', status, forms=[
            {'a': e.index + 1, 'displayed': e.displayed,
             'f': None if e.expression is None else e.expression.to_string(generator_names(m)),
             'matches': e.displayed_matches} for e in displayed]))

    descents = []
    for inv in spec.invariants:
        for f in (inv, inv * inv):
            descents.append(verify_invariant_descent(spec, f).to_dict())
    checks.append(_check('invariant-descent',
                         'pass' if all(d['status'] == 'pass' for d in descents) else 'fail',
                         samples=descents))

    reduced = []
    for name, inv in zip(spec.invariant_names, spec.invariants):
        expression = reduced_dynamics(spec, inv, max_degree)
        reduced.append({'invariant': name,
                        'derivative': None if expression is None
                        else expression.to_string(list(spec.invariant_names))})
    checks.append(_check('reduced-dynamics',
                         'pass' if all(r['derivative'] is not None for r in reduced) else 'fail',
                         invariants=reduced))

    if spec.group.name == 'se2':
        # p = 0 is the orbit-type stratum with the larger isotropy
        checks.append(_check('stratum', 'pass' if stratum_check(spec) else 'fail'))
    else:
        checks.append(_check('stratum', 'skip', reason="free action, a single orbit type"))

    if spec.split_invariant is None:
        checks.append(_check('split-commutation', 'skip'))
    else:
        try:
            h_sigma, h_j = split_hamiltonian(spec)
            checks.append(_check('split-commutation', 'pass', h_sigma=h_sigma.to_string(names),
                                 h_j=h_j.to_string(names)))
        except SplitError as exc:
            checks.append(_check('split-commutation', 'fail', error=str(exc)))

    collective = collective_form(spec)
    checks.append(_check('collective', 'info', collective=collective is not None,
                         form=None if collective is None
                         else collective.to_string(generator_names(m))))

    if spec.group.name == 'se2':
        samples = [isotropy_check(spec, mu) for mu in ([0.0, 1.0, 1.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0])]
        checks.append(_check('isotropy', 'info', samples=samples))

    passed = all(c['status'] != 'fail' for c in checks)
    return {
        'system': spec.name,
        'parameters': parameters(spec),
        'max_degree': max_degree,
        'checks': checks,
        'passed': passed,
    }


def systems_listing() -> list[dict]:
    listing = []
    for name in BUILTIN_NAMES:
        spec = builtin(name)
        listing.append({
            'name': name,
            'symplectic': spec.symplectic,
            'group': spec.group.name,
            'coordinates': list(spec.coordinate_names),
            'default_state': list(spec.default_state),
            't_span': list(spec.default_t_span),
            'parameters': parameters(spec),
        })
    return listing


