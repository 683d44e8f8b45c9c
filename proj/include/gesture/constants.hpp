#pragma once

// Every published constant the pipeline depends on lives here. Values marked
// "chosen" are local decisions where the published method is silent.

namespace gesture::constants {

// Speech windowing
inline constexpr double kHopSeconds = 0.010;            // chosen: 100 frames/s
inline constexpr double kContextSeconds = 1.0;          // context each side of a stroke
inline constexpr double kMaxInputSeconds = 5.5;         // fixed network input length
inline constexpr int kWindowFrames = 550;               // kMaxInputSeconds / kHopSeconds
inline constexpr double kMaxStrokeSeconds = kMaxInputSeconds - 2.0 * kContextSeconds;

// Audio features
inline constexpr int kMfccCoeffs = 12;
inline constexpr int kMelFilters = 26;
inline constexpr double kMfccWindowSeconds = 0.025;
inline constexpr double kPitchWindowSeconds = 0.040;
inline constexpr double kPitchMinHz = 60.0;
inline constexpr double kPitchMaxHz = 400.0;
inline constexpr double kVoicingThreshold = 0.3;        // chosen
inline constexpr double kLogFloor = 1e-10;              // chosen
inline constexpr double kOctaveGuard = 0.9;             // chosen: first peak within 90% of best

// Network
inline constexpr int kFeedForwardSize = 64;
inline constexpr int kHiddenSize = 64;
inline constexpr double kInputDropout = 0.25;
inline constexpr double kOutputDropout = 0.25;
inline constexpr double kLearningRate = 2e-4;
inline constexpr int kEpochsKinematic = 70;             // velocity, initial acceleration
inline constexpr int kEpochsOther = 140;
inline constexpr int kBatchSize = 32;                   // chosen
inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;
inline constexpr double kBatchNormEpsilon = 1e-5;       // chosen
inline constexpr double kBatchNormMomentum = 0.1;       // chosen

// Splits
inline constexpr double kValidationFraction = 0.04;
inline constexpr double kTestFraction = 0.015;

// Gesture parameters
inline constexpr int kSmoothingFrames = 5;              // chosen
inline constexpr double kMajorPeakFraction = 0.5;       // chosen
inline constexpr double kSwivelMinArmLength = 0.01;     // meters

// Evaluation
inline constexpr int kBaselineRepeats = 3;
inline constexpr double kPathLengthBandDivisor = 4.0;   // pl_true +- std(pl)/4
inline constexpr double kSignificanceLevel = 0.05;
inline constexpr int kBonferroniTests = 16;
inline constexpr int kExactWilcoxonMaxN = 20;

// Stimuli
inline constexpr double kLowerPercentile = 0.25;
inline constexpr double kUpperPercentile = 0.75;
inline constexpr double kSequenceSeconds = 10.0;
inline constexpr double kSequenceGridSeconds = 1.0;     // chosen
inline constexpr int kSequencesPerCondition = 5;

}  // namespace gesture::constants
