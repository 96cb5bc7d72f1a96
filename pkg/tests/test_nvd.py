import json
import logging
from pathlib import Path

import pytest
import requests

from imshag.errors import CveNotFoundError, FetchError, MissingWeightsError, ModelValidationError, UnsupportedRecordError
from imshag.model import StrideWeights
from imshag.nvd import NvdExtract, RateLimiter, fetch_nvd, merge_weights, parse_nvd_record, parse_nvd_records

FIXTURES = Path(__file__).parent / "fixtures" / "nvd"


def fixture(cve):
    return json.loads((FIXTURES / f"{cve}.json").read_text())


def test_parse_webmin_record():
    e = parse_nvd_record(fixture("CVE-2019-15107"))
    assert (e.cve_id, e.impact_score, e.exploitability_score) == ("CVE-2019-15107", 5.9, 3.9)
    assert e.cvss_version == "3.1"


def test_parse_mrfc_record():
    e = parse_nvd_record(fixture("CVE-2022-20053"))
    assert (e.impact_score, e.exploitability_score) == (5.9, 1.8)


def _bare(metrics):
    return {"vulnerabilities": [{"cve": {"id": "CVE-2001-0001", "descriptions": [
        {"lang": "es", "value": "hola"}, {"lang": "en", "value": "hello"}], "metrics": metrics}}]}


def test_v2_only_record_unsupported():
    doc = _bare({"cvssMetricV2": [{"type": "Primary", "exploitabilityScore": 10.0, "impactScore": 6.4}]})
    with pytest.raises(UnsupportedRecordError, match="no CVSS v3"):
        parse_nvd_record(doc)


def test_v30_fallback_and_english_description():
    doc = _bare({"cvssMetricV30": [{"type": "Primary", "cvssData": {"version": "3.0"},
                                    "exploitabilityScore": 2.2, "impactScore": 3.6}]})
    e = parse_nvd_record(doc)
    assert (e.impact_score, e.exploitability_score, e.cvss_version) == (3.6, 2.2, "3.0")
    assert e.description == "hello"


def test_v31_preferred_over_v30():
    doc = _bare({
        "cvssMetricV30": [{"type": "Primary", "exploitabilityScore": 1.0, "impactScore": 1.0}],
        "cvssMetricV31": [{"type": "Primary", "exploitabilityScore": 3.9, "impactScore": 5.9}],
    })
    assert parse_nvd_record(doc).impact_score == 5.9


def test_primary_entry_wins_then_first():
    doc = _bare({"cvssMetricV31": [
        {"type": "Secondary", "exploitabilityScore": 1.8, "impactScore": 3.6},
        {"type": "Primary", "exploitabilityScore": 3.9, "impactScore": 5.9},
    ]})
    assert parse_nvd_record(doc).exploitability_score == 3.9
    doc = _bare({"cvssMetricV31": [
        {"type": "Secondary", "exploitabilityScore": 1.8, "impactScore": 3.6},
        {"type": "Secondary", "exploitabilityScore": 3.9, "impactScore": 5.9},
    ]})
    assert parse_nvd_record(doc).exploitability_score == 1.8


def test_scores_are_not_rewritten():
    doc = _bare({"cvssMetricV31": [{"type": "Primary", "exploitabilityScore": 2.8349, "impactScore": 0.1}]})
    e = parse_nvd_record(doc)
    assert repr(e.exploitability_score) == "2.8349" and repr(e.impact_score) == "0.1"


def test_parse_many_skips_unsupported(caplog):
    docs = [fixture("CVE-2019-15107"), _bare({}), fixture("CVE-2018-7285")]
    with caplog.at_level(logging.WARNING):
        out = parse_nvd_records(docs)
    assert [e.cve_id for e in out] == ["CVE-2019-15107", "CVE-2018-7285"]
    assert "no CVSS v3" in caplog.text


PCSCF = StrideWeights(0.15, 0.15, 0, 0, 0.70, 0)


def test_merge_d_dominant():
    recs = merge_weights([parse_nvd_record(fixture("CVE-2019-15107"))], {"CVE-2019-15107": PCSCF})
    rec = recs["CVE-2019-15107"]
    assert rec.stride == PCSCF
    assert max("STRIDE", key=rec.stride.__getitem__) == "D"


def test_merge_all_table_rows(canonical):
    extracts = [parse_nvd_record(fixture(c)) for c in canonical.vuln_catalogue]
    weights = {c: r.stride for c, r in canonical.vuln_catalogue.items()}
    recs = merge_weights(extracts, weights, weight_tolerance=canonical.weight_tolerance)
    assert len(recs) == 12
    for cve, rec in recs.items():
        assert (rec.aim, rec.es, rec.stride) == (canonical.vuln_catalogue[cve].aim,
                                                 canonical.vuln_catalogue[cve].es,
                                                 canonical.vuln_catalogue[cve].stride)


def test_merge_missing_weights():
    with pytest.raises(MissingWeightsError, match="CVE-2019-15107"):
        merge_weights([parse_nvd_record(fixture("CVE-2019-15107"))], {})


def test_merge_ignores_unknown_weights(caplog):
    extracts = [parse_nvd_record(fixture("CVE-2019-15107"))]
    with caplog.at_level(logging.WARNING):
        recs = merge_weights(extracts, {"CVE-2019-15107": PCSCF, "CVE-1999-0001": PCSCF})
    assert list(recs) == ["CVE-2019-15107"]
    assert "CVE-1999-0001" in caplog.text


def test_merge_rejects_bad_weights():
    with pytest.raises(ModelValidationError, match="weights sum 0.9"):
        merge_weights([NvdExtract("CVE-2019-15107", 5.9, 3.9)],
                      {"CVE-2019-15107": StrideWeights(0.1, 0.1, 0, 0, 0.7, 0)})


class FakeResponse:
    def __init__(self, status, doc=None):
        self.status_code = status
        self.text = json.dumps(doc) if doc is not None else ""
        self._doc = doc

    def json(self):
        return self._doc


class FakeSession:
    def __init__(self, response=None, error=None):
        self.response, self.error, self.calls = response, error, []

    def get(self, url, params=None, headers=None, timeout=None):
        self.calls.append((url, params))
        if self.error:
            raise self.error
        return self.response


def no_wait():
    return RateLimiter(clock=lambda: 0.0, sleep=lambda s: None, limit=10**6)


def test_cache_hit_makes_no_request(tmp_path):
    (tmp_path / "CVE-2019-15107.json").write_text(json.dumps(fixture("CVE-2019-15107")))
    session = FakeSession(error=AssertionError("network used"))
    doc = fetch_nvd("CVE-2019-15107", tmp_path, session=session)
    assert parse_nvd_record(doc).impact_score == 5.9
    assert session.calls == []


def test_fetch_writes_cache(tmp_path):
    recorded = fixture("CVE-2018-10544")
    session = FakeSession(FakeResponse(200, recorded))
    doc = fetch_nvd("CVE-2018-10544", tmp_path / "cache", session=session, limiter=no_wait())
    assert doc == recorded
    assert session.calls[0][1] == {"cveId": "CVE-2018-10544"}
    assert json.loads((tmp_path / "cache" / "CVE-2018-10544.json").read_text()) == recorded
    # second call served from disk
    fetch_nvd("CVE-2018-10544", tmp_path / "cache", session=FakeSession(error=AssertionError()))


def test_fetch_offline_miss(tmp_path):
    with pytest.raises(FetchError, match="network access disabled"):
        fetch_nvd("CVE-2019-15107", tmp_path, offline=True)


def test_fetch_connection_error(tmp_path):
    session = FakeSession(error=requests.ConnectionError("no route"))
    with pytest.raises(FetchError, match="no route"):
        fetch_nvd("CVE-2019-15107", tmp_path, session=session, limiter=no_wait())
    assert not (tmp_path / "CVE-2019-15107.json").exists()


def test_fetch_http_status(tmp_path):
    with pytest.raises(FetchError) as err:
        fetch_nvd("CVE-2019-15107", tmp_path, session=FakeSession(FakeResponse(503)), limiter=no_wait())
    assert err.value.status == 503


def test_fetch_unknown_cve(tmp_path):
    empty = {"resultsPerPage": 0, "totalResults": 0, "vulnerabilities": []}
    with pytest.raises(CveNotFoundError):
        fetch_nvd("CVE-2099-99999", tmp_path, session=FakeSession(FakeResponse(200, empty)), limiter=no_wait())
    with pytest.raises(CveNotFoundError):
        fetch_nvd("CVE-2099-99999", tmp_path, session=FakeSession(FakeResponse(404)), limiter=no_wait())


def test_cache_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("IMSHAG_CACHE", str(tmp_path))
    (tmp_path / "CVE-2019-15107.json").write_text(json.dumps(fixture("CVE-2019-15107")))
    assert fetch_nvd("CVE-2019-15107", offline=True)["vulnerabilities"]


class FakeClock:
    def __init__(self):
        self.now = 0.0
        self.slept = []

    def __call__(self):
        return self.now

    def sleep(self, s):
        self.slept.append(s)
        self.now += s


def test_rate_limiter_five_per_thirty_seconds():
    clock = FakeClock()
    lim = RateLimiter(limit=5, window=30.0, clock=clock, sleep=clock.sleep)
    stamps = []
    for _ in range(12):
        lim.wait()
        stamps.append(clock.now)
        clock.now += 1.0
    for k in range(len(stamps)):
        window = [s for s in stamps if stamps[k] <= s < stamps[k] + 30.0]
        assert len(window) <= 5
    assert clock.slept[0] == pytest.approx(25.0)
