#pragma once

#include <array>
#include <optional>
#include <string_view>

// Published per-model mean scores (three-run averages) with and without the
// harness, the matching random-play rows, effect sizes and prompt-pair scores
// used by the reconstruction tests.
namespace reference {

// Game column order used in every table below.
enum Col { kSokoban = 0, kTetris = 1, k2048 = 2, kCandy = 3 };

struct ModelScores {
  std::string_view model;
  std::optional<std::array<double, 4>> without;  // nullopt: not evaluated
  std::array<double, 4> with;
};

inline constexpr std::array<ModelScores, 13> kScores{{
    {"claude-3-5-sonnet", std::array{0.0, 12.3, 57.8, 17.0}, {0.0, 14.7, 108.2, 106.0}},
    {"claude-3-7-sonnet", std::array{0.0, 13.0, 114.2, 126.3}, {2.3, 16.3, 113.3, 484.0}},
    {"deepseek-r1", std::nullopt, {1.3, 14.3, 105.2, 447.3}},
    {"gemini-2.5-flash", std::array{0.0, 19.0, 107.4, 97.7}, {1.7, 16.3, 106.6, 334.7}},
    {"gemini-2.5-pro", std::array{1.0, 12.3, 120.5, 177.3}, {4.3, 23.3, 117.3, 416.3}},
    {"grok-3-mini", std::nullopt, {5.7, 21.3, 118.6, 254.0}},
    {"llama-4-maverick", std::array{0.0, 11.7, 44.6, 32.3}, {0.0, 10.3, 106.0, 128.7}},
    {"gpt-4.1", std::array{0.0, 13.0, 94.5, 101.0}, {0.0, 13.7, 105.7, 182.0}},
    {"gpt-4o", std::array{0.0, 14.7, 70.4, 59.0}, {0.0, 14.0, 106.7, 147.3}},
    {"o1", std::array{0.0, 13.0, 128.1, 90.0}, {2.3, 35.0, 128.9, 159.0}},
    {"o1-mini", std::nullopt, {1.3, 11.7, 114.0, 48.0}},
    {"o3", std::array{2.0, 31.0, 128.2, 106.0}, {8.0, 42.0, 128.0, 647.0}},
    {"o4-mini", std::array{1.3, 15.0, 97.6, 110.7}, {5.3, 25.3, 120.6, 487.3}},
}};

struct RandomRow {
  double mean;
  double std;
};

inline constexpr std::array<RandomRow, 4> kRandom{{{0.0, 0.0}, {10.2, 1.8}, {100.4, 7.8}, {116.5, 51.5}}};

struct PairedResult {
  Col game;
  double mean_diff;
  double t;
  double p;
};

inline constexpr std::array<PairedResult, 4> kPairedTests{{
    {k2048, 17.81, 2.36, 0.0424},
    {kCandy, 217.50, 4.22, 0.0022},
    {kSokoban, 1.97, 3.02, 0.0144},
    {kTetris, 5.60, 2.27, 0.0490},
}};

// Effect sizes: {2048, candy, tetris} with and without the harness.
struct DeltaRow {
  std::string_view model;
  std::array<double, 3> with;
  std::array<double, 3> without;
};

inline constexpr std::array<Col, 3> kDeltaCols{k2048, kCandy, kTetris};

inline constexpr std::array<DeltaRow, 10> kDeltas{{
    {"claude-3-5-sonnet", {0.992, -0.204, 2.524}, {-5.446, -1.933, 1.215}},
    {"claude-3-7-sonnet", {1.648, 7.140, 3.459}, {1.752, 0.191, 1.589}},
    {"gemini-2.5-flash", {0.787, 4.238, 3.459}, {0.883, -0.366, 4.955}},
    {"gemini-2.5-pro", {2.148, 5.825, 7.386}, {2.558, 1.182, 1.215}},
    {"gpt-4.1", {0.675, 1.273, 1.963}, {-0.762, -0.301, 1.589}},
    {"gpt-4o", {0.793, 0.599, 2.150}, {-3.833, -1.117, 2.524}},
    {"llama-4-maverick", {0.707, 0.236, 0.093}, {-7.124, -1.635, 0.841}},
    {"o1", {3.631, 0.826, 13.930}, {3.530, -0.515, 1.589}},
    {"o3", {3.516, 10.306, 17.856}, {3.541, -0.204, 11.686}},
    {"o4-mini", {2.577, 7.204, 8.508}, {-0.368, -0.113, 2.711}},
}};

inline constexpr double kDeltaStar = 2.748;
inline constexpr double kMeanDeltaWith = 2.757;
inline constexpr double kMeanDeltaWithout = 0.009;

// 2048 scores of two empirical and two optimized prompt templates.
struct PromptPairRow {
  std::string_view model;
  double empirical_1, empirical_2, delta_e;
  double optimized_1, optimized_2, delta_p;
};

inline constexpr std::array<PromptPairRow, 3> kPromptPairs{{
    {"gemini-2.5-flash", 1697.3, 1478.7, 218.6, 1746.0, 1601.3, 144.7},
    {"claude-3-5-sonnet", 2624.0, 2235.3, 388.7, 2786.0, 2928.0, 142.0},
    {"o4-mini", 4432.0, 3680.0, 752.0, 3851.3, 4320.0, 468.7},
}};

inline constexpr double kReductionMinPct = 33.8;
inline constexpr double kReductionMaxPct = 63.5;

}  // namespace reference
