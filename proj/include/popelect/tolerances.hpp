#pragma once

// Acceptance-band slack, versioned in one place. The underlying lemmas are
// asymptotic; these are the desk-scale gates the validation suite enforces.

namespace popelect::tol {

inline constexpr int kToleranceVersion = 1;

inline constexpr double kBackupMeanRel = 0.05;     // backup-only mean vs (n-1)^2
inline constexpr double kRoleSplitSlack = 5.0;     // |n_C - n/4| <= slack * n / log2 n
inline constexpr double kCascadeLow = 0.45;        // C_{l+1} >= low * q^2 n
inline constexpr double kCascadeHigh = 1.1;        // C_{l+1} <= high * q^2 n
inline constexpr double kCascadeMinExp = 2.0 / 3.0; // check levels with C_l >= n^exp
inline constexpr double kJuntaLowExp = 0.45;       // n^low <= C_Phi
inline constexpr double kJuntaHighExp = 0.77;      // C_Phi <= n^high
inline constexpr double kDragHistRel = 0.25;       // D'_l vs n_I * 4^-l
inline constexpr double kTrialPassFrac = 0.95;     // per-trial bands must hold in >= 95%
inline constexpr double kDragRatioLow = 2.0;       // median T_{l+1}/T_l band
inline constexpr double kDragRatioHigh = 8.0;
inline constexpr double kOracleGrowthMax = 1.5;    // mean B growth per F0 doubling
inline constexpr double kLocationGate = 0.05;      // two-sample test gate
inline constexpr double kUniformityP = 0.001;      // chi-square uniformity gate
inline constexpr double kScalingRatioMax = 2.0;    // max/min of t/(log n loglog n)

} // namespace popelect::tol
