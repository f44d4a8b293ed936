"""FastAPI application exposing fit, interaction, inference, and simulation.

The service is stateless: every request carries its own data.  Numeric and
convergence failures map to HTTP 422 with a machine-readable ``error``
object; malformed requests keep FastAPI's standard validation response.
"""

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import inference, simulation
from ..core import ProblemData, default_lambda
from ..errors import CampaignError, ConvergenceError, NumericError, UsageError
from ..interaction import interaction_fast, interaction_naive
from ..nodewise import fit_nodewise
from ..solver import SolverOptions, fit_multitask_lasso
from . import schemas

# penalty level used for the sigma-pilot pre-fit when lam="auto"
_PILOT_SPARSITY = 1


def _solver_options(model):
    return SolverOptions(
        max_iters=model.max_iters,
        tol=model.tol,
        kkt_tol=model.kkt_tol,
        support_tol=model.support_tol,
    )


def _auto_lambda(data, s_guess, eta1, eta2, opts):
    """Tuning level from the default rule with a pilot residual scale.

    The noise level is unknown in practice, so a pre-fit at the rule with
    unit noise and unit sparsity guess supplies a residual-scale estimate
    that is then plugged back into the rule.  The covariance diagonal is
    estimated by the largest mean column square.
    """
    n, p, t = data.n, data.p, data.n_tasks
    sigma_jj_max = float(np.max(np.einsum("ij,ij->j", data.x, data.x)) / n)
    lam_pilot = default_lambda(n, p, t, _PILOT_SPARSITY, sigma=1.0,
                               sigma_jj_max=sigma_jj_max, eta1=eta1, eta2=eta2)
    pre = fit_multitask_lasso(data, lam_pilot, opts)
    sigma_pilot = inference.sigma_hat(data, pre.b_hat)
    if sigma_pilot <= 0:
        raise NumericError("pilot residual scale is zero; cannot auto-tune")
    lam = default_lambda(n, p, t, s_guess, sigma=sigma_pilot,
                         sigma_jj_max=sigma_jj_max, eta1=eta1, eta2=eta2)
    return lam, sigma_pilot


def _fit_for_request(x, y, lam, s_guess, opts=None, eta1=0.0, eta2=0.0):
    data = ProblemData(x, y)
    opts = opts or SolverOptions()
    if lam is None:
        lam, sigma_pilot = _auto_lambda(data, s_guess, eta1, eta2, opts)
        mode = "auto"
    else:
        sigma_pilot = None
        mode = "explicit"
    fit = fit_multitask_lasso(data, lam, opts)
    return data, fit, lam, mode, sigma_pilot


def _direction_and_z0(req, data, fit):
    """Resolve the (direction, z0 or nodewise) pair for a ci/ellipsoid request."""
    if req.variant in ("known", "hat_E", "check_E", "check_E_sigma_hat"):
        if req.sigma_mat is None:
            raise UsageError(f"variant {req.variant!r} requires sigma_mat")
        sigma = req.sigma_mat.to_array()
        if req.direction is not None:
            a_raw = np.asarray(req.direction, dtype=np.float64)
        elif req.j is not None:
            a_raw = np.zeros(data.p)
            a_raw[req.j] = 1.0
        else:
            raise UsageError("supply either direction or j")
        nd = inference.normalize_direction(a_raw, sigma, data.x)
        return nd.a, nd.z0, None
    if req.variant in ("unknown", "hat_E_j", "check_E_sigma_hat_j"):
        if req.j is None:
            raise UsageError(f"variant {req.variant!r} requires j")
        nw = fit_nodewise(data.x, int(req.j), variant="scaled_lasso")
        return None, None, nw
    raise UsageError(f"unknown variant {req.variant!r}")


def create_app():
    app = FastAPI(title="mtlasso", version="0.1.0")

    @app.exception_handler(UsageError)
    async def _usage_handler(request: Request, exc: UsageError):
        return JSONResponse(status_code=400, content={"error": {"kind": "usage", "message": str(exc)}})

    @app.exception_handler(NumericError)
    async def _numeric_handler(request: Request, exc: NumericError):
        kind = "convergence" if isinstance(exc, ConvergenceError) else "numeric"
        return JSONResponse(status_code=422, content={"error": {"kind": kind, "message": str(exc)}})

    @app.exception_handler(CampaignError)
    async def _campaign_handler(request: Request, exc: CampaignError):
        return JSONResponse(status_code=422, content={"error": {"kind": "campaign", "message": str(exc)}})

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        from .. import __version__

        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/fit", response_model=schemas.FitResponse)
    def fit_endpoint(req: schemas.FitRequest):
        data, fit, lam, mode, sigma_pilot = _fit_for_request(
            req.x.to_array(), req.y.to_array(), req.lam, req.sparsity_guess_s,
            _solver_options(req.options), req.eta1, req.eta2,
        )
        return schemas.FitResponse(
            b_hat=schemas.MatrixPayload.from_array(fit.b_hat),
            support=fit.support,
            support_size=len(fit.support),
            iterations_used=fit.iterations_used,
            kkt_residual=fit.kkt_residual,
            objective=fit.objective,
            lambda_used=lam,
            lambda_mode=mode,
            sigma_pilot=sigma_pilot,
            n=data.n, p=data.p, t=data.n_tasks,
        )

    @app.post("/interaction", response_model=schemas.InteractionResponse)
    def interaction_endpoint(req: schemas.InteractionRequest):
        from ..solver import support as support_of

        x = req.x.to_array()
        b_hat = req.b_hat.to_array()
        if x.shape[1] != b_hat.shape[0]:
            raise UsageError(
                f"x has {x.shape[1]} columns but b_hat has {b_hat.shape[0]} rows"
            )
        supp = support_of(b_hat, req.support_tol)
        if req.method == "woodbury":
            am = interaction_fast(x, b_hat, req.lam, supp)
        elif req.method == "naive":
            am = interaction_naive(x, b_hat, req.lam, supp)
        else:
            raise UsageError(f"unknown method {req.method!r}")
        diff = None
        if req.check_against_naive:
            other = interaction_naive(x, b_hat, req.lam, supp)
            diff = float(np.max(np.abs(am.a_hat - other.a_hat)))
        asym = am.max_asymmetry()
        report = schemas.InteractionReport(
            symmetric=bool(asym <= 1e-10),
            max_asymmetry=asym,
            min_eig=am.min_eigenvalue(),
            op_norm=am.operator_norm(),
            support_size=am.support_size,
            method=am.method,
            rank_ok=am.rank_ok,
            max_abs_diff_vs_naive=diff,
        )
        return schemas.InteractionResponse(
            a_hat=schemas.MatrixPayload.from_array(am.a_hat), report=report
        )

    @app.post("/ci", response_model=schemas.CiResponse)
    def ci_endpoint(req: schemas.CiRequest):
        data, fit, lam, _, _ = _fit_for_request(
            req.x.to_array(), req.y.to_array(), req.lam, req.sparsity_guess_s
        )
        am = interaction_fast(data.x, fit.b_hat, lam, fit.support)
        a, z0, nw = _direction_and_z0(req, data, fit)
        if req.variant == "known":
            interval = inference.ci_known_sigma(
                data, fit.b_hat, am, a, z0, req.alpha, task=req.task
            )
        else:
            interval = inference.ci_unknown_sigma(
                data, fit.b_hat, am, nw, req.alpha, task=req.task,
                tau_choice=req.tau_choice,
            )
        return schemas.CiResponse(
            center=interval.center,
            half_length=interval.half_length,
            lower=interval.lower,
            upper=interval.upper,
            alpha=interval.alpha,
            variant=interval.variant,
            lambda_used=lam,
        )

    def _build_region(req):
        data, fit, lam, _, _ = _fit_for_request(
            req.x.to_array(), req.y.to_array(), req.lam, req.sparsity_guess_s
        )
        am = interaction_fast(data.x, fit.b_hat, lam, fit.support)
        a, z0, nw = _direction_and_z0(req, data, fit)
        if req.variant in ("hat_E", "check_E"):
            region = inference.ellipsoid_known_sigma(
                data, fit.b_hat, am, a, z0, req.alpha, variant=req.variant
            )
        elif req.variant == "check_E_sigma_hat":
            region = inference.ellipsoid_sigma_hat(data, fit.b_hat, am, a, z0, req.alpha)
        elif req.variant == "hat_E_j":
            region = inference.ellipsoid_unknown_sigma(
                data, fit.b_hat, am, nw, req.alpha, scale="gamma_hat_matrix"
            )
        elif req.variant == "check_E_sigma_hat_j":
            region = inference.ellipsoid_unknown_sigma(
                data, fit.b_hat, am, nw, req.alpha, scale="sigma_hat"
            )
        else:
            raise UsageError(f"unknown variant {req.variant!r}")
        return region, lam

    @app.post("/ellipsoid", response_model=schemas.EllipsoidResponse)
    def ellipsoid_endpoint(req: schemas.EllipsoidRequest):
        region, lam = _build_region(req)
        return schemas.EllipsoidResponse(
            u=[float(v) for v in region.center_u],
            C=schemas.MatrixPayload.from_array(region.shape_c),
            q=region.q,
            alpha=region.alpha,
            variant=region.variant,
            lambda_used=lam,
        )

    @app.post("/test-row", response_model=schemas.TestRowResponse)
    def test_row_endpoint(req: schemas.TestRowRequest):
        region, lam = _build_region(req)
        verdict = inference.test_row_null(region)
        return schemas.TestRowResponse(
            u=[float(v) for v in region.center_u],
            C=schemas.MatrixPayload.from_array(region.shape_c),
            q=region.q,
            alpha=region.alpha,
            variant=region.variant,
            lambda_used=lam,
            reject=verdict["reject"],
            pivot_at_zero=verdict["pivot_at_zero"],
        )

    @app.post("/simulate", response_model=schemas.SimulateResponse)
    def simulate_endpoint(req: schemas.SimulateRequest):
        cm = req.config
        cfg = simulation.SimConfig(
            n=cm.n, p=cm.p, t=cm.t, s=cm.s, s_omega=cm.s_omega, sigma=cm.sigma,
            alpha=cm.alpha, n_sim=cm.n_sim, overlap_mode=cm.overlap_mode,
            seed=cm.seed, variants=tuple(cm.variants), with_width=cm.with_width,
            eta1=cm.eta1, eta2=cm.eta2,
        )
        records, summary = simulation.run_monte_carlo(cfg, threads=req.threads)
        reps = [
            schemas.ReplicateModel(
                replicate=r.replicate,
                seed_key=[int(k) for k in r.seed_key],
                pivot_values={k: float(v) for k, v in r.pivot_values.items()},
                covered=r.covered,
                widths={k: float(v) for k, v in r.widths.items()},
                sigma_hat=0.0 if r.failed else float(r.sigma_hat),
                support_size=r.support_size,
                failed=r.failed,
                failure_reason=r.failure_reason,
            )
            for r in records
        ]
        return schemas.SimulateResponse(replicates=reps, summary=summary)

    return app


app = create_app()
