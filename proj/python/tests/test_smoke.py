# Copyright 2026 The LinearVC Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#  http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


import numpy as np
import pytest

import linearvc as lvc


def test_lvcf_round_trip(tmp_path):
    x = np.arange(6, dtype=np.float64).reshape(2, 3) / 4
    lvc.write_matrix(x, tmp_path / "x.lvcf")
    assert (tmp_path / "x.lvcf").stat().st_size == 24 + 4 * 6
    np.testing.assert_array_equal(lvc.read_matrix(tmp_path / "x.lvcf"), x)
    data = lvc.encode_lvcf(x)
    assert data[:4] == b"LVCF"
    np.testing.assert_array_equal(lvc.decode_lvcf(data), x)


def test_corrupt_input_raises():
    data = lvc.encode_lvcf(np.ones((2, 2)))
    with pytest.raises(lvc.LengthError):
        lvc.decode_lvcf(data[:-1])
    with pytest.raises(lvc.FormatError):
        lvc.decode_lvcf(b"XXXX" + data[4:])
    with pytest.raises(lvc.InvalidMatrixError):
        lvc.write_matrix(np.array([[np.nan]]), "unused.lvcf")


def test_matching():
    pairs = lvc.match_frames(np.array([[1.0, 0.0]]),
                             np.array([[0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]), k=2)
    assert pairs.target_indices == [2, 1]
    assert pairs.distances[1] == pytest.approx(1 - 1 / np.sqrt(2))


def test_fit_recovers_rotation():
    rng = np.random.default_rng(0)
    q, _ = np.linalg.qr(rng.standard_normal((8, 8)))
    x = rng.standard_normal((100, 8))
    m = lvc.fit(x, x @ q, kind="orthogonal")
    assert m.kind == "orthogonal"
    np.testing.assert_allclose(m.weight, q, atol=1e-10)
    np.testing.assert_allclose(m.apply(x), x @ q, atol=1e-10)


def test_lstsq_matches_numpy():
    rng = np.random.default_rng(1)
    x, y = rng.standard_normal((50, 6)), rng.standard_normal((50, 6))
    np.testing.assert_allclose(lvc.lstsq(x, y), np.linalg.lstsq(x, y, rcond=None)[0],
                               atol=1e-10)


def test_factorized_conversion_on_plant(tmp_path):
    speakers, truth = lvc.generate(n_frames=300, d=16, r_true=4, k_speakers=3, noise=0.0)
    block = lvc.stack_aligned(speakers)
    f = lvc.factorize(block, ["a", "b", "c"], 16, rank=4)
    assert f.effective_rank == 4
    target = truth["content_points"] @ truth["speaker_transforms"][2]
    np.testing.assert_allclose(f.convert(speakers[0], "a", "c"), target, atol=1e-8)
    f.save(tmp_path / "fac")
    g = lvc.load_factorization(tmp_path / "fac")
    assert g.speaker_ids == ["a", "b", "c"]
    with pytest.raises(lvc.UnknownSpeakerError):
        g.speaker_map("z")


def test_metrics():
    assert lvc.wer("the cat sat", "the bat sat on") == pytest.approx(2 / 3)
    assert lvc.cer("abc", "abd") == pytest.approx(1 / 3)
    assert lvc.eer([0.9, 0.8, 0.2], [0.7, 0.1, 0.05]) == pytest.approx(1 / 3)
    with pytest.raises(lvc.UndefinedMetricError):
        lvc.wer("", "x")
