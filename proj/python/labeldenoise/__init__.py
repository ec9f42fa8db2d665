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

"""Python bindings for the LabelDenoise C++ core."""

from labeldenoise._ldn import (
    InputError,
    FormatError,
    NumericError,
    combine,
    error_taxonomy,
    fit_ensemble_weights,
    gap_at_n,
    gap_at_n_matrix,
    gradcheck_suite,
    mix_rows,
    run_command,
    segment_scenes,
)

__all__ = [
    "InputError",
    "FormatError",
    "NumericError",
    "combine",
    "error_taxonomy",
    "fit_ensemble_weights",
    "gap_at_n",
    "gap_at_n_matrix",
    "gradcheck_suite",
    "mix_rows",
    "run_command",
    "segment_scenes",
]
