"""NVD CVE records: parsing CVSS v3 subscores, weight merging and a cached client."""

from __future__ import annotations

import json
import logging
import os
import time
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import requests

from .errors import CveNotFoundError, FetchError, MissingWeightsError, ModelValidationError, UnsupportedRecordError
from .model import CVE_PATTERN, WEIGHT_SUM_TOLERANCE, StrideWeights, Violation, VulnerabilityRecord

log = logging.getLogger(__name__)

NVD_BASE = "https://services.nvd.nist.gov/rest/json/cves/2.0"
V3_METRIC_KEYS = ("cvssMetricV31", "cvssMetricV30")


@dataclass(frozen=True)
class NvdExtract:
    cve_id: str
    impact_score: float
    exploitability_score: float
    description: str = ""
    cvss_version: str = ""


def _cve_item(document: Mapping) -> Mapping:
    # accept a full API response or a bare "cve" object
    if "vulnerabilities" in document:
        vulns = document["vulnerabilities"]
        if not vulns:
            raise UnsupportedRecordError("response contains no vulnerabilities")
        return vulns[0]["cve"]
    if "cve" in document:
        return document["cve"]
    return document


def _pick_metric(entries: Sequence[Mapping]) -> Mapping:
    for entry in entries:
        if entry.get("type") == "Primary":
            return entry
    return entries[0]


def parse_nvd_record(document: Mapping) -> NvdExtract:
    """Extract CVSS v3.1 (else v3.0) impact and exploitability subscores."""
    cve = _cve_item(document)
    cve_id = cve.get("id")
    if not cve_id:
        raise UnsupportedRecordError("record has no CVE id")
    metrics = cve.get("metrics") or {}
    for key in V3_METRIC_KEYS:
        entries = metrics.get(key)
        if not entries:
            continue
        m = _pick_metric(entries)
        try:
            impact = m["impactScore"]
            exploitability = m["exploitabilityScore"]
        except KeyError as exc:
            raise UnsupportedRecordError(f"{cve_id}: {key} entry lacks {exc.args[0]}") from None
        version = (m.get("cvssData") or {}).get("version", "3.1" if key.endswith("31") else "3.0")
        description = next(
            (d.get("value", "") for d in cve.get("descriptions", []) if d.get("lang") == "en"), ""
        )
        return NvdExtract(cve_id, impact, exploitability, description, version)
    raise UnsupportedRecordError(f"{cve_id}: no CVSS v3 metric")


def merge_weights(extracts: Sequence[NvdExtract], weights: Mapping[str, StrideWeights],
                  weight_tolerance: float = WEIGHT_SUM_TOLERANCE) -> dict[str, VulnerabilityRecord]:
    """Attach analyst STRIDE weights to each extract.

    Weights for CVEs that have no extract are ignored with a warning.
    """
    missing = [e.cve_id for e in extracts if e.cve_id not in weights]
    if missing:
        raise MissingWeightsError(missing)
    extra = set(weights) - {e.cve_id for e in extracts}
    for cve in sorted(extra):
        log.warning("weights given for %s, which has no NVD record; ignored", cve)

    records = {}
    violations = []
    for e in extracts:
        rec = VulnerabilityRecord(e.cve_id, e.impact_score, e.exploitability_score, weights[e.cve_id],
                                  e.description)
        violations += [Violation(f"vuln {e.cve_id}", p) for p in rec.problems(weight_tolerance)]
        records[e.cve_id] = rec
    if violations:
        raise ModelValidationError(violations)
    return records


class RateLimiter:
    """Sliding-window limiter: at most ``limit`` calls per ``window`` seconds."""

    def __init__(self, limit=5, window=30.0, clock=time.monotonic, sleep=time.sleep):
        self.limit = limit
        self.window = window
        self.clock = clock
        self.sleep = sleep
        self._stamps: deque[float] = deque()

    def wait(self):
        now = self.clock()
        while self._stamps and now - self._stamps[0] >= self.window:
            self._stamps.popleft()
        if len(self._stamps) >= self.limit:
            delay = self.window - (now - self._stamps[0])
            if delay > 0:
                self.sleep(delay)
            now = self.clock()
            self._stamps.popleft()
        self._stamps.append(now)


_default_limiter = RateLimiter()


def default_cache_dir() -> Path:
    return Path(os.environ.get("IMSHAG_CACHE", Path.home() / ".cache" / "imshag" / "nvd"))


def fetch_nvd(cve_id: str, cache_dir=None, *, session=None, offline: bool = False,
              limiter: RateLimiter | None = None, timeout: float = 30.0) -> dict:
    """Return the NVD API 2.0 response for ``cve_id``, consulting the cache first.

    Fetches are sequential by design; the shared limiter keeps them within
    the public API quota.  ``offline=True`` turns a cache miss into an error.
    """
    if not CVE_PATTERN.fullmatch(cve_id):
        raise CveNotFoundError(f"malformed CVE id {cve_id!r}")
    cache = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    cached = cache / f"{cve_id}.json"
    if cached.exists():
        return json.loads(cached.read_text(encoding="utf-8"))
    if offline:
        raise FetchError(f"{cve_id} not cached and network access disabled")

    (limiter or _default_limiter).wait()
    http = session or requests
    headers = {}
    if os.environ.get("NVD_API_KEY"):
        headers["apiKey"] = os.environ["NVD_API_KEY"]
    try:
        resp = http.get(NVD_BASE, params={"cveId": cve_id}, headers=headers, timeout=timeout)
    except requests.RequestException as exc:
        raise FetchError(f"{cve_id}: {exc}") from exc
    if resp.status_code == 404:
        raise CveNotFoundError(f"{cve_id} not found", status=404)
    if resp.status_code != 200:
        raise FetchError(f"{cve_id}: HTTP {resp.status_code}", status=resp.status_code)
    doc = resp.json()
    if not doc.get("vulnerabilities"):
        raise CveNotFoundError(f"{cve_id} not found", status=resp.status_code)

    cache.mkdir(parents=True, exist_ok=True)
    cached.write_text(resp.text, encoding="utf-8")
    return doc


def parse_nvd_records(documents: Sequence[Mapping]) -> list[NvdExtract]:
    """Parse many records, skipping (and logging) those without CVSS v3 data."""
    out = []
    for doc in documents:
        try:
            out.append(parse_nvd_record(doc))
        except UnsupportedRecordError as exc:
            log.warning("skipping record: %s", exc)
    return out
