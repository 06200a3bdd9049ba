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


"""Linear voice conversion: frame matching, linear maps and factorization."""

from ._linearvc import (
    ConsistencyError,
    Error,
    FormatError,
    InvalidMatrixError,
    IoError,
    LengthError,
    LinearMap,
    MatchedPairs,
    ParameterError,
    ShapeError,
    SpeakerFactorization,
    UndefinedMetricError,
    UnknownSpeakerError,
    assemble_block,
    cer,
    decode_lvcf,
    encode_lvcf,
    eer,
    factorize,
    fit,
    generate,
    knn_convert,
    load_factorization,
    load_map,
    lstsq,
    match_frames,
    normalize_text,
    pinv,
    read_matrix,
    stack_aligned,
    wer,
    write_matrix,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
