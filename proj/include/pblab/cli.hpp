#pragma once

namespace pblab::cli {

enum ExitCode : int {
    kOk = 0,
    kUnexpected = 1,
    kInvalidInput = 2,
    kNonConvergence = 3,
    kAssumptionViolated = 4,
    kCertificationFailed = 5,
};

/**
 * Entry point of the pblab tool.
 *
 *   pblab solve    --estimator L --lambda V (--data F | --config F) [--lambda2 V]
 *   pblab tune     (--config F | --estimator L --data F)
 *   pblab verify   --mode M (--config F | --estimator L) [--data F]
 *   pblab campaign --config F [--jobs N]
 *   pblab catalog
 *
 * Every command writes its outputs and manifest.json under --out-dir.
 * Logging goes to stderr at the level named by PBLAB_LOG (error, info, debug).
 */
int run_cli(int argc, const char* const* argv);

} // namespace pblab::cli
