# Copyright 2026 The LabelDenoise Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json

import numpy as np
import pytest

import labeldenoise as ldn


def brute_gap(preds, truth, n):
    pool = []
    for vid, entries in preds.items():
        for label, score in entries[:n]:
            pool.append((-score, vid, label, label in truth.get(vid, [])))
    pool.sort()
    hits, total = 0, 0.0
    for rank, item in enumerate(pool, start=1):
        if item[3]:
            hits += 1
            total += hits / rank
    return total / sum(len(v) for v in truth.values())


def test_gap_example_and_random():
    assert ldn.gap_at_n({"v": [(1, 0.9), (0, 0.5)]}, {"v": [0]}) == 0.5
    rng = np.random.default_rng(0)
    for _ in range(50):
        preds, truth = {}, {}
        for i in range(rng.integers(1, 6)):
            scores = rng.random(6)
            order = sorted(range(6), key=lambda l: (-scores[l], l))
            preds[f"v{i}"] = [(l, float(scores[l])) for l in order]
            truth[f"v{i}"] = [l for l in range(6) if rng.random() < 0.3]
        truth["v0"] = truth["v0"] or [0]
        n = int(rng.integers(1, 7))
        assert ldn.gap_at_n(preds, truth, n) == pytest.approx(brute_gap(preds, truth, n), abs=1e-12)
    m = np.array([[0.5, 0.9]])
    assert ldn.gap_at_n_matrix(m, ["v"], {"v": [0]}) == 0.5


def test_mixup_and_scenes():
    x = np.array([[0.0, 2.0], [2.0, 0.0]])
    np.testing.assert_array_equal(ldn.mix_rows(x, [1, 0], [1.0, 1.0]), x)
    np.testing.assert_array_equal(ldn.mix_rows(x, [1, 0], [0.5, 0.5]), np.ones((2, 2)))
    frames = np.array([[1.0, 0.0]] * 3 + [[0.0, 1.0]] * 2)
    assert ldn.segment_scenes(frames, 0.2) == [0, 3]


def test_ensemble_and_taxonomy():
    truth = {"a": [0], "b": [1]}
    good = np.array([[0.9, 0.1], [0.2, 0.8]])
    bad = 1.0 - good
    fit = ldn.fit_ensemble_weights([bad, good], ["a", "b"], truth)
    assert fit["gap"] >= max(fit["singleton_gaps"]) - 1e-9
    assert sum(fit["weights"]) == pytest.approx(1.0)
    comb = ldn.combine([bad, good], [0.25, 0.75])
    assert comb.min() >= 0.0 and comb.max() <= 1.0
    t = ldn.error_taxonomy({"v": [(1, 0.9), (0, 0.5)]}, {"v": [0]}, 2)
    assert t == {"v": {0: "FN", 1: "FP"}}
    with pytest.raises(ldn.InputError):
        ldn.error_taxonomy({"v": [(1, 0.9)]}, {"v": [0]}, 2)


def test_gradcheck_and_cli(tmp_path):
    assert max(err for _, err in ldn.gradcheck_suite()) < 1e-4
    code, out, _ = ldn.run_command(["synth", "--out", str(tmp_path / "d.ldns"), "--videos", "20"])
    assert code == 0
    assert json.loads(out)["records"] == 20
    code, _, err = ldn.run_command(["eval", "--pred", str(tmp_path / "missing"), "--truth", "x"])
    assert code == 2 and err
