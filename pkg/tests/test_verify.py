import json

import pytest

import verify
from numerics import CatalogError, DomainError
from verify import (
    EVALUATORS,
    REPORT_FIELDS,
    IdentityCatalog,
    IdentityRecord,
    VerifyReport,
    default_catalog,
    summary,
)


def _exact(identity_id, lhs, rhs, N=20, **extra):
    return {"id": identity_id, "description": identity_id, "paper_ref": "ref", "kind": "exact_series",
            "params": {"lhs": lhs, "rhs": rhs, "N": N}, "tolerance": None, "tags": ["exact"], **extra}


def _numeric(identity_id, evaluator, tol=1e-9, **params):
    return {"id": identity_id, "description": identity_id, "paper_ref": "ref", "kind": "numeric",
            "params": {"evaluator": evaluator, **params}, "tolerance": tol, "tags": ["num"]}


# -- catalogue livré -----------------------------------------------------------

def test_shipped_catalog_is_well_formed():
    catalog = default_catalog()
    assert len(catalog) >= 80
    ids = [r.id for r in catalog.list()]
    assert ids == sorted(ids)
    assert len(set(ids)) == len(ids)
    for record in catalog.list():
        if not record.negative_control:
            assert record.paper_ref
        if record.kind == "numeric":
            assert record.tolerance > 0
            assert record.params["evaluator"] in EVALUATORS


def test_every_reference_is_quoted_from_the_source(source_text):
    missing = [r.id for r in default_catalog().list()
               if r.paper_ref and " ".join(r.paper_ref.split()) not in source_text]
    assert missing == []


def test_tag_filters():
    catalog = default_catalog()
    exact = catalog.list("exact")
    assert exact and all(r.kind == "exact_series" for r in exact)
    assert not any(r.negative_control for r in exact)
    conductor24 = {r.id for r in catalog.list("conductor24")}
    assert {"M8_M2_F23", "TH_F23", "G1_ELEMENTARY"} <= conductor24
    assert catalog.list("all") == catalog.list()
    assert catalog.list("no-such-tag") == []
    assert "negative" in catalog.tags()


def test_negative_controls_are_flagged():
    catalog = default_catalog()
    controls = [r.id for r in catalog.list() if r.negative_control]
    assert sorted(controls) == ["COR00_N", "LR_226_G4", "LR_226_GM2", "NEGCTRL_G_HALF_SIGN", "NEGCTRL_PHI_PSI"]
    assert [r.id for r in catalog.list("discrepancy")] == ["COR00_N", "LR_226_G4", "LR_226_GM2"]
    assert catalog.list("negative") == [r for r in catalog.list() if r.negative_control]


def test_exact_identity_passes():
    report = verify.run("QSERIES_EXACT_PHINEG_ETA")
    assert report.status == "pass"
    assert report.abs_err == 0.0
    assert report.lhs is None and report.rhs is None
    assert report.tol == 0.0


def test_negative_exact_control_fails():
    report = verify.run("NEGCTRL_PHI_PSI")
    assert report.status == "fail"
    assert report.abs_err >= 1


def test_numeric_identity_passes():
    report = verify.run("G_HALF")
    assert report.status == "pass"
    assert report.abs_err <= 1e-7
    assert report.lhs == pytest.approx(report.rhs, abs=1e-7)


def test_negative_numeric_control_fails():
    assert verify.run("NEGCTRL_G_HALF_SIGN").status == "fail"


@pytest.mark.slow
@pytest.mark.parametrize("identity_id,gap", [("COR00_N", 0.108), ("LR_226_G4", 0.433), ("LR_226_GM2", 1.107)])
def test_discrepancy_records_fail_by_a_wide_margin(identity_id, gap):
    report = verify.run(identity_id)
    assert report.status == "fail"
    assert report.abs_err == pytest.approx(gap, abs=5e-3)


def test_kurokawa_ochiai_record_covers_three_moduli():
    record = default_catalog().get("KO_FUNCEQ")
    assert record.params["alphas"] == [0.2, 0.5, 0.9]
    assert verify.run("KO_FUNCEQ").status == "pass"


def test_a_at_minus_q_lambert_record():
    report = verify.run("QSERIES_EXACT_A_NEGQ_LAMBERT")
    assert report.status == "pass"
    assert report.abs_err == 0.0


def test_unknown_identity():
    with pytest.raises(CatalogError):
        verify.run("NOPE")


# -- catalogues construits -------------------------------------------------------------

def test_malformed_records(catalog_file):
    with pytest.raises(CatalogError):
        IdentityCatalog(catalog_file([{"id": "X"}]))
    with pytest.raises(CatalogError):
        IdentityCatalog(catalog_file([_numeric("X", "no_such_evaluator")]))
    with pytest.raises(CatalogError):
        IdentityCatalog(catalog_file([_numeric("X", "deg2", tol=0.0, q=0.1)]))
    with pytest.raises(CatalogError):
        IdentityCatalog(catalog_file([_exact("X", "phi(q)", "phi(q)"), _exact("X", "psi(q)", "psi(q)")]))
    record = _exact("X", "phi(q)", "phi(q)")
    record["paper_ref"] = ""
    with pytest.raises(CatalogError):
        IdentityCatalog(catalog_file([record]))


def test_unreadable_catalog(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(CatalogError):
        IdentityCatalog(path)


def test_evaluation_error_is_reported(catalog_file, monkeypatch):
    def boom(params):
        raise DomainError("hors domaine")

    monkeypatch.setitem(EVALUATORS, "boom", boom)
    catalog = IdentityCatalog(catalog_file([_numeric("BOOM", "boom")]))
    report = catalog.run("BOOM")
    assert report.status == "error"
    assert "hors domaine" in report.message
    assert report.abs_err is None


def test_worst_pair_is_reported(catalog_file, monkeypatch):
    monkeypatch.setitem(EVALUATORS, "pairs", lambda params: [(1.0, 1.0), (2.0, 2.5), (3.0, 3.1)])
    catalog = IdentityCatalog(catalog_file([_numeric("PAIRS", "pairs", tol=1.0)]))
    report = catalog.run("PAIRS")
    assert (report.lhs, report.rhs) == (2.0, 2.5)
    assert report.abs_err == pytest.approx(0.5)
    assert report.passed


def test_parse_error_in_exact_record(catalog_file):
    catalog = IdentityCatalog(catalog_file([_exact("BAD", "phi(q", "phi(q)")]))
    report = catalog.run("BAD")
    assert report.status == "error"
    assert "position" in report.message


def test_run_all_is_deterministic(catalog_file):
    records = [
        _exact("A_PHINEG", "phineg(q)", "eta(q)^2/eta(q^2)"),
        _exact("B_CUBIC", "a(q)^3", "b(q)^3 + c(q)^3"),
        _exact("C_WRONG", "phi(q)", "psi(q)", N=5),
        _numeric("D_DEG2", "deg2", tol=1e-10, q=0.1),
    ]
    catalog = IdentityCatalog(catalog_file(records))
    serial = catalog.run_all(parallelism=1)
    parallel = catalog.run_all(parallelism=4)
    assert [r.id for r in serial] == ["A_PHINEG", "B_CUBIC", "C_WRONG", "D_DEG2"]
    strip = lambda reports: [(r.id, r.status, r.abs_err) for r in reports]
    assert strip(serial) == strip(parallel)
    counts = summary(serial, catalog)
    assert counts == {"pass": 3, "fail": 1, "error": 0, "total": 4, "non_control_failures": 1}


def test_summary_excludes_controls():
    catalog = default_catalog()
    reports = [verify.run("NEGCTRL_PHI_PSI"), verify.run("QSERIES_EXACT_B_DEF")]
    counts = summary(reports, catalog)
    assert counts["fail"] == 1
    assert counts["non_control_failures"] == 0


# -- rapports ---------------------------------------------------------------------

def test_report_round_trip():
    report = VerifyReport("X", "desc", "ref", 1.0, 1.0 + 1e-12, 1e-12, 1e-9, "pass", 0.01)
    data = json.loads(json.dumps(report.to_dict()))
    assert list(data) == list(REPORT_FIELDS)
    assert VerifyReport.from_dict(data) == report


def test_report_without_message_column():
    data = VerifyReport("X", "desc", "ref", 1.0, 1.0, 0.0, 1e-9, "pass", 0.01).to_dict()
    assert data.pop("message") == ""
    report = VerifyReport.from_dict(data)
    assert report.message == ""
    assert report.passed


def test_record_to_dict():
    record = IdentityRecord.from_dict(_exact("X", "phi(q)", "phi(q)"))
    data = record.to_dict()
    assert data["tags"] == ["exact"]
    assert IdentityRecord.from_dict(data) == record


@pytest.mark.slow
def test_boyd_tag_passes():
    reports = verify.run_all("boyd", parallelism=2)
    assert [r.status for r in reports] == ["pass", "pass"]


@pytest.mark.slow
def test_exact_tag_passes():
    assert all(r.passed for r in verify.run_all("exact"))


@pytest.mark.slow
def test_full_catalog_has_no_failure_outside_controls():
    catalog = default_catalog()
    reports = catalog.run_all()
    counts = summary(reports, catalog)
    failing = [r.id for r in reports if not r.passed and not catalog.get(r.id).negative_control]
    assert counts["non_control_failures"] == 0, failing
