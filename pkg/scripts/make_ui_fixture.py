#!/usr/bin/env python3
"""Regenerate the frontend contract fixture from the live service.

Builds a four-variable session with one tightly coupled pair, then records
the service's own responses for every nonempty variable subset at rho=0.8
(inadmissible ones via force so the report fields are still present) plus
the grouping blocks over a rho sweep. The frontend tests replay these
payloads to prove the client displays service numbers verbatim.

Usage: python scripts/make_ui_fixture.py [--out frontend/fixtures/nu4_fixture.json]
"""

import argparse
import json
import math
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

from bfma.service import SessionStore, create_app


def fixture_csv(n=160, seed=0, pair_rho=0.9):
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((n, 5))
    q, _ = np.linalg.qr(raw - raw.mean(axis=0))
    u = q * math.sqrt(n)
    x0 = u[:, 0]
    x1 = pair_rho * x0 + math.sqrt(1 - pair_rho**2) * u[:, 1]
    X = np.column_stack([x0, x1, u[:, 2], u[:, 3]])
    y = 0.3 * (x0 + x1) / 2 + rng.standard_normal(n)
    lines = ["outcome,v_one,v_two,v_three,v_four"]
    for i in range(n):
        lines.append(",".join(f"{v:.10f}" for v in [y[i], *X[i]]))
    return "\n".join(lines) + "\n"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument(
        "--out", type=Path, default=Path("frontend/fixtures/nu4_fixture.json")
    )
    ap.add_argument("--tmp-store", type=Path, default=Path("/tmp/bfma-ui-fixture-store"))
    args = ap.parse_args()

    client = TestClient(create_app(SessionStore(args.tmp_store)))
    config = {"mu": 0.1, "h": 1.0, "tau": 9.0, "sigma2": 1.0}
    created = client.post(
        "/sessions", json={"csv": fixture_csv(), "config": config}
    ).json()
    session_id = created["id"]

    session = client.get(f"/sessions/{session_id}").json()
    names = session["names"]

    rho = 0.8
    groups = client.get(f"/sessions/{session_id}/groups", params={"rho": rho}).json()
    rho_sweep = {
        str(r): client.get(f"/sessions/{session_id}/groups", params={"rho": r}).json()
        for r in (0.0, 0.3, 0.5, 0.8, 0.95, 1.0)
    }

    tests = []
    for mask in range(1, 1 << len(names)):
        tested = [names[j] for j in range(len(names)) if mask >> j & 1]
        payload = client.post(
            f"/sessions/{session_id}/test",
            json={"tested": tested, "rho": rho, "tau": 9.0, "alpha": 0.025, "force": True},
        ).json()
        tests.append({"mask": mask, "tested": tested, "response": payload})

    estimates = client.get(f"/sessions/{session_id}/estimates").json()

    doc = {
        "session": session,
        "rho": rho,
        "groups": groups,
        "rho_sweep": rho_sweep,
        "tests": tests,
        "estimates": estimates,
    }
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps(doc, indent=1, sort_keys=True))
    print(f"wrote {args.out} with {len(tests)} recorded group tests")


if __name__ == "__main__":
    main()
