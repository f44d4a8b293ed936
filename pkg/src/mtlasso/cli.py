"""Command-line front end: a thin client of the HTTP service.

Every subcommand reads input files, builds a JSON request, posts it to the
service, and writes the response to disk.  By default requests are routed
to an in-process instance of the application (no server needs to run);
``--server URL`` points the same client at a remote deployment.

Exit codes: 0 success, 1 usage error (flags, files, validation),
2 numeric or convergence error.  Errors are printed to stderr as one JSON
object per failure.
"""

import argparse
import json
import os
import sys

import httpx

from .core import atomic_write_text, load_matrix, matrix_to_json_obj
from .simulation import PIVOT_KINDS, PRESETS

_EXIT_OK = 0
_EXIT_USAGE = 1
_EXIT_NUMERIC = 2


def _client(server):
    if server:
        return httpx.Client(base_url=server, timeout=None)
    # drive the ASGI app synchronously, no server process needed
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # starlette warns about httpx pairing here
        from starlette.testclient import TestClient

    from .service.app import app

    return TestClient(app, raise_server_exceptions=False)


def _fail(kind, message, code):
    sys.stderr.write(json.dumps({"error": {"kind": kind, "message": message}}) + "\n")
    return code


def _post(client, path, payload):
    """POST and return the parsed body, or exit-worthy error tuple."""
    resp = client.post(path, json=payload)
    if resp.status_code == 200:
        return resp.json(), None
    try:
        body = resp.json()
    except ValueError:
        body = {}
    err = body.get("error")
    if err:
        code = _EXIT_USAGE if err.get("kind") == "usage" else _EXIT_NUMERIC
        return None, _fail(err.get("kind", "numeric"), err.get("message", ""), code)
    return None, _fail("usage", f"request rejected ({resp.status_code}): {body}", _EXIT_USAGE)


def _matrix_payload(path):
    return matrix_to_json_obj(load_matrix(path))


def _write_json(path, obj):
    atomic_write_text(path, json.dumps(obj, indent=2) + "\n")


def _write_matrix_csv(path, payload):
    rows, cols, data = payload["rows"], payload["cols"], payload["data"]
    lines = []
    for i in range(rows):
        lines.append(",".join(repr(float(v)) for v in data[i * cols : (i + 1) * cols]))
    atomic_write_text(path, "\n".join(lines) + "\n")


def _load_config(path_or_preset):
    if path_or_preset in PRESETS:
        cfg = PRESETS[path_or_preset]
        return {
            "schema_version": 1,
            "n": cfg.n, "p": cfg.p, "t": cfg.t, "s": cfg.s, "s_omega": cfg.s_omega,
            "sigma": cfg.sigma, "alpha": cfg.alpha, "n_sim": cfg.n_sim,
            "overlap_mode": cfg.overlap_mode, "seed": cfg.seed,
            "variants": list(cfg.variants), "with_width": cfg.with_width,
            "eta1": cfg.eta1, "eta2": cfg.eta2,
        }
    with open(path_or_preset) as fh:
        return json.load(fh)


def _threads_from(args):
    if args.threads is not None:
        return args.threads
    env = os.environ.get("MTLASSO_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise SystemExit(_fail("usage", f"MTLASSO_THREADS={env!r} is not an integer", _EXIT_USAGE))
    return os.cpu_count() or 1


def _parse_lambda(value):
    if value is None or value == "auto":
        return None
    try:
        return float(value)
    except ValueError:
        raise SystemExit(_fail("usage", f"--lambda must be a number or 'auto', got {value!r}", _EXIT_USAGE))


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="mtlasso",
        description="Multi-task Lasso estimation, debiased inference, and "
        "Monte-Carlo validation (thin client of the mtlasso service)",
    )
    parser.add_argument("--server", default=None,
                        help="base URL of a running service; default runs in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, need_xy=True):
        if need_xy:
            p.add_argument("--x", required=True, help="design matrix file (csv or json)")
            p.add_argument("--y", required=True, help="response matrix file (csv or json)")
        p.add_argument("--lambda", dest="lam", default=None,
                       help="penalty level, or 'auto' for the default rule with a pilot scale")
        p.add_argument("--out", required=True, help="output directory or file")
        p.add_argument("--format", choices=("csv", "json"), default="csv",
                       help="matrix output format")

    p_fit = sub.add_parser("fit", help="fit the multi-task Lasso")
    add_common(p_fit)
    p_fit.add_argument("--sparsity-guess", type=int, default=1,
                       help="row-sparsity guess inside the penalty rule's log term")

    p_int = sub.add_parser("interaction", help="compute the interaction matrix")
    p_int.add_argument("--x", required=True)
    p_int.add_argument("--b-hat", required=True, help="fitted coefficient matrix file")
    p_int.add_argument("--lambda", dest="lam", required=True)
    p_int.add_argument("--method", choices=("woodbury", "naive"), default="woodbury")
    p_int.add_argument("--check", action="store_true",
                       help="also run the defining pseudoinverse formula and report the difference")
    p_int.add_argument("--out", required=True)
    p_int.add_argument("--format", choices=("csv", "json"), default="csv")

    p_ci = sub.add_parser("ci", help="confidence interval for one coefficient or functional")
    add_common(p_ci)
    p_ci.add_argument("--alpha", type=float, default=0.05)
    p_ci.add_argument("--task", type=int, default=0)
    p_ci.add_argument("--variant", choices=("known", "unknown"), default="known")
    p_ci.add_argument("--j", type=int, default=None, help="covariate index")
    p_ci.add_argument("--direction", default=None, help="direction vector file")
    p_ci.add_argument("--sigma-mat", default=None, help="design covariance file (known variant)")

    p_ell = sub.add_parser("ellipsoid", help="confidence ellipsoid for one coefficient row")
    add_common(p_ell)
    p_ell.add_argument("--alpha", type=float, default=0.05)
    p_ell.add_argument("--variant", default="check_E_sigma_hat",
                       choices=("hat_E", "check_E", "check_E_sigma_hat", "hat_E_j",
                                "check_E_sigma_hat_j"))
    p_ell.add_argument("--j", type=int, default=None)
    p_ell.add_argument("--direction", default=None)
    p_ell.add_argument("--sigma-mat", default=None)

    p_test = sub.add_parser("test-row", help="test whether a coefficient row is all zeros")
    add_common(p_test)
    p_test.add_argument("--alpha", type=float, default=0.05)
    p_test.add_argument("--variant", default=None,
                        choices=("hat_E", "check_E", "check_E_sigma_hat", "hat_E_j",
                                 "check_E_sigma_hat_j"),
                        help="defaults to check_E_sigma_hat with --sigma-mat, else "
                             "check_E_sigma_hat_j")
    p_test.add_argument("--j", type=int, required=True)
    p_test.add_argument("--sigma-mat", default=None)

    p_sim = sub.add_parser("simulate", help="run a Monte-Carlo campaign")
    p_sim.add_argument("--config", required=True,
                       help="JSON config file or preset name "
                            f"({', '.join(sorted(PRESETS))})")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_sim.add_argument("--alpha", type=float, default=None, help="override the config alpha")
    p_sim.add_argument("--threads", type=int, default=None,
                       help="worker threads (env MTLASSO_THREADS, then cpu count)")

    return parser


# ---------------------------------------------------------------------------
# replicate CSV layout: fixed, deterministic column order


def _replicates_csv(replicates, variants):
    pivot_cols = [k for k in PIVOT_KINDS if k in variants]
    cov_keys = sorted({k for r in replicates for k in r["covered"]})
    width_keys = sorted({k for r in replicates for k in r["widths"]})
    header = (
        ["schema_version", "replicate", "seed_master", "seed_index"]
        + [f"pivot_{k}" for k in pivot_cols]
        + [f"covered_{k}" for k in cov_keys]
        + [f"width_{k}" for k in width_keys]
        + ["sigma_hat", "support_size", "failed", "failure_reason"]
    )
    lines = [",".join(header)]
    for r in replicates:
        row = ["1", str(r["replicate"]), str(r["seed_key"][0]), str(r["seed_key"][1])]
        for k in pivot_cols:
            row.append(repr(r["pivot_values"][k]) if k in r["pivot_values"] else "")
        for k in cov_keys:
            row.append(str(int(r["covered"][k])) if k in r["covered"] else "")
        for k in width_keys:
            row.append(repr(r["widths"][k]) if k in r["widths"] else "")
        row.append(repr(r["sigma_hat"]))
        row.append(str(r["support_size"]))
        row.append(str(int(r["failed"])))
        row.append('"' + r["failure_reason"].replace('"', "'") + '"' if r["failure_reason"] else "")
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_fit(args, client):
    payload = {
        "x": _matrix_payload(args.x),
        "y": _matrix_payload(args.y),
        "lam": _parse_lambda(args.lam),
        "sparsity_guess_s": args.sparsity_guess,
    }
    body, err = _post(client, "/fit", payload)
    if err is not None:
        return err
    os.makedirs(args.out, exist_ok=True)
    if args.format == "json":
        _write_json(os.path.join(args.out, "b_hat.json"), body["b_hat"])
    else:
        _write_matrix_csv(os.path.join(args.out, "b_hat.csv"), body["b_hat"])
    report = {k: v for k, v in body.items() if k != "b_hat"}
    report["schema_version"] = 1
    _write_json(os.path.join(args.out, "fit_report.json"), report)
    print(f"fit: |S|={body['support_size']} lambda={body['lambda_used']:.6g} "
          f"kkt={body['kkt_residual']:.2e} -> {args.out}")
    return _EXIT_OK


def _cmd_interaction(args, client):
    lam = _parse_lambda(args.lam)
    if lam is None:
        return _fail("usage", "interaction requires an explicit --lambda value", _EXIT_USAGE)
    payload = {
        "x": _matrix_payload(args.x),
        "b_hat": _matrix_payload(args.b_hat),
        "lam": lam,
        "method": args.method,
        "check_against_naive": bool(args.check),
    }
    body, err = _post(client, "/interaction", payload)
    if err is not None:
        return err
    os.makedirs(args.out, exist_ok=True)
    if args.format == "json":
        _write_json(os.path.join(args.out, "a_hat.json"), body["a_hat"])
    else:
        _write_matrix_csv(os.path.join(args.out, "a_hat.csv"), body["a_hat"])
    report = dict(body["report"])
    report["schema_version"] = 1
    _write_json(os.path.join(args.out, "interaction_report.json"), report)
    print(f"interaction: method={report['method']} |S|={report['support_size']} "
          f"op_norm={report['op_norm']:.4g} -> {args.out}")
    return _EXIT_OK


def _request_with_direction(args, extra):
    payload = {
        "x": _matrix_payload(args.x),
        "y": _matrix_payload(args.y),
        "lam": _parse_lambda(args.lam),
        "alpha": args.alpha,
    }
    if getattr(args, "j", None) is not None:
        payload["j"] = args.j
    if getattr(args, "direction", None):
        vec = load_matrix(args.direction).ravel()
        payload["direction"] = [float(v) for v in vec]
    if getattr(args, "sigma_mat", None):
        payload["sigma_mat"] = _matrix_payload(args.sigma_mat)
    payload.update(extra)
    return payload


def _cmd_ci(args, client):
    payload = _request_with_direction(args, {"variant": args.variant, "task": args.task})
    body, err = _post(client, "/ci", payload)
    if err is not None:
        return err
    body["schema_version"] = 1
    _write_json(args.out, body)
    print(f"ci: [{body['lower']:.6g}, {body['upper']:.6g}] -> {args.out}")
    return _EXIT_OK


def _cmd_ellipsoid(args, client):
    payload = _request_with_direction(args, {"variant": args.variant})
    body, err = _post(client, "/ellipsoid", payload)
    if err is not None:
        return err
    body["schema_version"] = 1
    _write_json(args.out, body)
    print(f"ellipsoid: variant={body['variant']} q={body['q']:.6g} -> {args.out}")
    return _EXIT_OK


def _cmd_test_row(args, client):
    variant = args.variant or ("check_E_sigma_hat" if args.sigma_mat else "check_E_sigma_hat_j")
    payload = _request_with_direction(args, {"variant": variant})
    body, err = _post(client, "/test-row", payload)
    if err is not None:
        return err
    body["schema_version"] = 1
    _write_json(args.out, body)
    print(f"test-row: reject={body['reject']} pivot_at_zero={body['pivot_at_zero']:.4g} "
          f"-> {args.out}")
    return _EXIT_OK


def _cmd_simulate(args, client):
    try:
        config = _load_config(args.config)
    except (OSError, json.JSONDecodeError) as exc:
        return _fail("usage", f"cannot load config {args.config!r}: {exc}", _EXIT_USAGE)
    if args.seed is not None:
        config["seed"] = args.seed
    if args.alpha is not None:
        config["alpha"] = args.alpha
    threads = _threads_from(args)
    body, err = _post(client, "/simulate", {"config": config, "threads": threads})
    if err is not None:
        return err
    os.makedirs(args.out, exist_ok=True)
    csv_text = _replicates_csv(body["replicates"], config.get("variants", []))
    atomic_write_text(os.path.join(args.out, "replicates.csv"), csv_text)
    _write_json(os.path.join(args.out, "summary.json"), body["summary"])
    summ = body["summary"]
    print(f"simulate: {summ['n_completed']} replicates "
          f"({summ['n_failed']} failed) -> {args.out}")
    return _EXIT_OK


_HANDLERS = {
    "fit": _cmd_fit,
    "interaction": _cmd_interaction,
    "ci": _cmd_ci,
    "ellipsoid": _cmd_ellipsoid,
    "test-row": _cmd_test_row,
    "simulate": _cmd_simulate,
}


def dispatch(argv):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return _EXIT_USAGE if exc.code not in (0, None) else _EXIT_OK
    try:
        with _client(args.server) as client:
            return _HANDLERS[args.command](args, client)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else _EXIT_USAGE
    except (OSError, ValueError) as exc:
        return _fail("usage", str(exc), _EXIT_USAGE)
    except httpx.HTTPError as exc:
        return _fail("usage", f"cannot reach service: {exc}", _EXIT_USAGE)


def main():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
