"""End-to-end checks of the claim suite at reduced replicate counts."""

import numpy as np
import pytest

from heatlocal.errors import ConfigError
from heatlocal.mc import FAULT_INFLATE_Q, default_config
from heatlocal.verify import (
    covariance_reports,
    exit_code,
    first_failure,
    gram_reports,
    localtime_reports,
    moment_reports,
    spectral_reports,
    verify_all,
)

CLAIM_ORDER = (
    "integrator-upper-bound-sweep",
    "coercivity-lower-bound-sweep",
    "convolution-upper-bound-sweep",
    "spectral-dual-route",
    "form-eigenvalue-floor",
    "form-eigenvalue-monotone",
    "quadratic-form-mc",
    "gram-projection-sweep",
    "invertible-gram-sweep",
    "gram-indicator-discretization",
    "basis-extension-ratio",
    "simplex-partition-additivity",
    "bridge-moment-simplex-k1",
    "bridge-moment-simplex-k2",
    "bridge-moment-simplex-k3",
    "conditional-moment-identity",
    "levy-density-normalization",
    "covariance-closed-form",
    "simulator-agreement",
    "sheet-variance-bias",
    "local-time-mean-bridge",
    "bridge-mean-value",
    "local-time-mean-heat-short",
    "local-time-mean-heat-long",
    "bridge-second-moment",
    "bridge-second-moment-value",
    "second-moment-monotone",
    "motion-endpoint-moments",
    "levy-conditional-mean",
    "levy-conditional-value",
    "cauchy-monotone-bridge",
    "cauchy-monotone-heat-short",
    "cauchy-monotone-heat-long",
)

# claims whose outcome does not depend on sampled replicates
DETERMINISTIC_CLAIMS = frozenset(
    (
        "integrator-upper-bound-sweep",
        "coercivity-lower-bound-sweep",
        "convolution-upper-bound-sweep",
        "spectral-dual-route",
        "form-eigenvalue-floor",
        "form-eigenvalue-monotone",
        "gram-projection-sweep",
        "invertible-gram-sweep",
        "gram-indicator-discretization",
        "basis-extension-ratio",
        "simplex-partition-additivity",
        "bridge-moment-simplex-k1",
        "bridge-moment-simplex-k2",
        "conditional-moment-identity",
        "levy-density-normalization",
        "covariance-closed-form",
        "sheet-variance-bias",
        "second-moment-monotone",
    )
)


@pytest.fixture(scope="module")
def small_suite():
    cfg = default_config(replicates=400, grid_points=4096, master_seed=42)
    return verify_all(cfg)


def test_claim_ids_and_order(small_suite):
    assert tuple(r.claim_id for r in small_suite) == CLAIM_ORDER


def test_small_scale_suite_all_pass(small_suite):
    failures = [r.claim_id for r in small_suite if r.status != "pass"]
    assert failures == []
    assert exit_code(small_suite) == 0
    assert first_failure(small_suite) is None


def test_reports_carry_runtimes(small_suite):
    assert all(r.runtime_ms >= 0.0 for r in small_suite)
    assert any(r.runtime_ms > 0.0 for r in small_suite)


def test_failed_reports_are_out_of_tolerance(small_suite):
    # structural invariant: a pass status certifies the stated tolerance
    for r in small_suite:
        if r.standard_error is None:
            band = r.tolerance
        else:
            band = max(r.tolerance, 4.0 * r.standard_error)
        if r.status == "pass" and not np.all(np.asarray(r.expected) == 0.0):
            dev = max(abs(o - e) for o, e in zip(r.observed, r.expected))
            assert dev <= band + 1e-15


def test_single_replicate_marks_sampled_claims_insufficient():
    cfg = default_config(replicates=1, grid_points=4096, master_seed=7)
    reports = verify_all(cfg)
    for r in reports:
        if r.claim_id in DETERMINISTIC_CLAIMS:
            assert r.status == "pass", r.claim_id
        else:
            assert r.status == "insufficient-power", r.claim_id


def test_fault_injection_flips_only_the_integrator_claim():
    cfg = default_config(
        replicates=50,
        grid_points=4096,
        master_seed=42,
        fault_injection=FAULT_INFLATE_Q,
    )
    reports = spectral_reports(cfg)
    by_id = {r.claim_id: r.status for r in reports}
    assert by_id["integrator-upper-bound-sweep"] == "fail"
    del by_id["integrator-upper-bound-sweep"]
    assert set(by_id.values()) == {"pass"}
    assert exit_code(reports) == 1
    assert first_failure(reports) == "integrator-upper-bound-sweep"


def test_subcommand_blocks_partition_the_suite():
    cfg = default_config(replicates=2, grid_points=4096, master_seed=3)
    blocks = [
        spectral_reports(cfg),
        gram_reports(cfg),
        moment_reports(cfg),
        covariance_reports(cfg),
        localtime_reports(cfg),
    ]
    ids = tuple(r.claim_id for block in blocks for r in block)
    assert ids == CLAIM_ORDER


def test_coarse_grid_rejected_before_any_sampling():
    cfg = default_config(replicates=50_000, grid_points=2048)
    with pytest.raises(ConfigError, match="floor"):
        verify_all(cfg)


def test_verify_deterministic_across_jobs():
    kwargs = dict(replicates=120, grid_points=4096, master_seed=11)
    serial = verify_all(default_config(jobs=1, **kwargs))
    parallel = verify_all(default_config(jobs=3, **kwargs))
    for a, b in zip(serial, parallel):
        assert a.claim_id == b.claim_id
        assert a.observed == b.observed
        assert a.expected == b.expected
        assert a.standard_error == b.standard_error
        assert a.status == b.status
