// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sqlimc/engine.hpp"

namespace sqlimc {

struct ClassificationAmbiguous : std::runtime_error {
  explicit ClassificationAmbiguous(const std::string& m)
      : std::runtime_error("ambiguous classification: " + m) {}
};

enum class AttackKindTag : std::uint8_t { AuthBypass, DataExtraction, SecondOrder };

struct AttackKind {
  AttackKindTag tag = AttackKindTag::AuthBypass;
  std::string page;                 // AuthBypass target page
  AttackKindTag inner = AttackKindTag::DataExtraction; // SecondOrder payload
  std::string inner_page;

  std::string to_string() const;
};

struct TraceStep {
  std::string from;
  std::string to;
  Term message; // channel plumbing (nonces) already stripped
  bool injected = false;
};

struct AttackTrace {
  std::vector<TraceStep> steps;
  std::string goal;
  AttackKind classification;
};

// Projects the message-bearing rule firings out of a search result;
// assignments and guards are elided, secure-channel nonces are dropped
// from the rendered messages.
AttackTrace build_trace(const AttackFound& result, const TransitionSystem& ts);

// AB / DE / second-order classification from the violated goal's shape and
// the query firings in the trace.
AttackKind classify(const AttackTrace& trace, const TransitionSystem& ts);

// Message sequence chart: `n. sender -> receiver : message`, columns
// aligned, the intruder shown as `i`.
std::string render_msc(const AttackTrace& trace);

// Stable key-ordered text serialization of the whole trace.
std::string render_structured(const AttackTrace& trace);

// --- helpers for tests and the acceptance suite --------------------------

struct MscLine {
  std::string from;
  std::string to;
  Term message;
};

// Parses MSC text back into step skeletons. Accepts `<Name>` placeholder
// atoms which compare against intruder-invented constants.
std::vector<MscLine> parse_msc(const std::string& text);

// Structural equality of a built trace against an expected skeleton, up to
// a consistent renaming of intruder-invented atoms to `<...>` placeholders.
bool trace_matches(const AttackTrace& trace, const std::vector<MscLine>& expected,
                   std::string* why = nullptr);
bool trace_matches(const AttackTrace& trace, const std::string& expected_msc,
                   std::string* why = nullptr);

// Same comparison between two parsed MSCs (e.g. CLI output vs. an oracle).
bool msc_matches(const std::vector<MscLine>& actual,
                 const std::vector<MscLine>& expected, std::string* why = nullptr);

} // namespace sqlimc
