# Copyright 2026 The dpadv Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Python bindings for the DP adversarial training laboratory."""

from dpadv._core import (  # noqa: F401
    AttackConfig,
    Batch,
    Dataset,
    DPConfig,
    DpadvError,
    EpochRecord,
    MIAReport,
    Model,
    NoiseSource,
    PerSampleGrads,
    PrivacySpend,
    RdpCurve,
    Regime,
    SgdConfig,
    Tensor,
    account,
    adversarial_accuracy,
    attack_groups,
    attack_individual,
    calibrate_sigma,
    clip,
    default_rdp_orders,
    evaluate,
    fgsm,
    forward,
    grad_wrt_input,
    grads_per_sample,
    init_params,
    load_checkpoint,
    load_idx,
    loss_ce,
    pgd,
    poisson_subsample,
    rdp_single_step,
    run_experiment_config,
    save_checkpoint,
    smooth,
    synth_blobs,
    take,
    train,
    __version__,
)
