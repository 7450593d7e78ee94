// SPDX-License-Identifier: Apache-2.0

#include "sqlimc/concretize.hpp"

#include <istream>
#include <ostream>
#include <sstream>

namespace sqlimc {

std::vector<std::size_t> injected_steps(const AttackTrace& trace) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < trace.steps.size(); ++k)
    if (trace.steps[k].injected) out.push_back(k);
  return out;
}

bool exploits_extraction(const AttackTrace& trace) {
  if (trace.classification.tag == AttackKindTag::DataExtraction ||
      trace.classification.tag == AttackKindTag::SecondOrder)
    return true;
  // auth bypass that replays a tuple(...) handed out earlier
  for (std::size_t j = 0; j < trace.steps.size(); ++j) {
    if (trace.steps[j].to != "i") continue;
    for (const auto& sub : subterms(trace.steps[j].message)) {
      if (sub->kind != TermKind::Apply || sub->name != "tuple") continue;
      for (std::size_t k = j + 1; k < trace.steps.size(); ++k) {
        if (trace.steps[k].from != "i") continue;
        for (const auto& replay : subterms(trace.steps[k].message))
          if (term_equal(replay, sub)) return true;
      }
    }
  }
  return false;
}

std::string shell_quote(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '"' || c == '\\' || c == '$' || c == '`') out += '\\';
    out += c;
  }
  return out;
}

namespace {

// employee_id=101&password=x  ->  employee_id=?&password=?
std::string mask_post_values(const std::string& post) {
  std::string out;
  std::size_t pos = 0;
  while (pos <= post.size()) {
    std::size_t amp = post.find('&', pos);
    std::string kv = post.substr(pos, amp == std::string::npos ? std::string::npos
                                                               : amp - pos);
    std::size_t eq = kv.find('=');
    if (!out.empty()) out += "&";
    out += eq == std::string::npos ? kv : kv.substr(0, eq) + "=?";
    if (amp == std::string::npos) break;
    pos = amp + 1;
  }
  return out;
}

} // namespace

ConcretizationPlan concretize(const AttackTrace& trace,
                              const ConcretizationAnswers& answers) {
  ConcretizationPlan plan;
  bool sqlmap = exploits_extraction(trace);
  plan.kind = trace.classification;
  if (sqlmap && trace.classification.tag == AttackKindTag::AuthBypass) {
    // the injection itself extracts data; that is what gets concretized
    plan.kind = AttackKind{.tag = AttackKindTag::DataExtraction};
  }
  plan.post = answers.post;

  std::vector<std::size_t> steps = injected_steps(trace);
  if (answers.urls.size() < steps.size())
    throw MissingAnswer("a URL for each of the " + std::to_string(steps.size()) +
                        " injected steps (got " +
                        std::to_string(answers.urls.size()) + ")");
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const std::string& url = answers.urls[k];
    plan.urls.push_back(url);
    std::string cmd;
    if (sqlmap) {
      cmd = "sqlmap.py -u \"" + shell_quote(url) + "\"";
      if (!answers.post.empty())
        cmd += " --data \"" + shell_quote(answers.post) + "\"";
      cmd += " -a";
    } else {
      cmd = "curl";
      if (!answers.post.empty())
        cmd += " -d \"" + shell_quote(mask_post_values(answers.post)) + "\"";
      cmd += " \"" + shell_quote(url) + "\"";
    }
    plan.commands.push_back(std::move(cmd));
  }
  return plan;
}

ConcretizationAnswers run_dialogue(const AttackTrace& trace, std::istream& in,
                                   std::ostream& out) {
  ConcretizationAnswers answers;
  if (injected_steps(trace).empty()) return answers; // nothing to ask
  auto ask = [&](const std::string& question, const std::string& fallback,
                 bool required) -> std::string {
    out << question << "\n";
    std::string line;
    for (;;) {
      if (!std::getline(in, line)) {
        if (required) throw AbortedByUser();
        return fallback;
      }
      while (!line.empty() && (line.back() == '\r' || line.back() == '\n'))
        line.pop_back();
      if (!line.empty()) return line;
      if (!required) return fallback;
      // a required answer: an empty line re-asks
    }
  };

  out << "Just a couple of questions.\n";
  answers.webapp_name =
      ask("What's the name of the web app entity? [default: webapplication, "
          "press enter to keep it]",
          "webapplication", false);
  answers.database_name =
      ask("What's the name of the database entity? [default: database, press "
          "enter to keep it]",
          "database", false);

  std::vector<std::size_t> steps = injected_steps(trace);
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const TraceStep& st = trace.steps[steps[k]];
    std::string label = std::to_string(k) + " - i ->* " + answers.webapp_name +
                        " : " + to_string(st.message);
    std::string url = ask(
        "Can you give me the URI of the web page under test corresponding "
        "to:\n" + label,
        "", true);
    out << label << "\n" << url << "\n";
    answers.urls.push_back(url);
  }
  answers.post = ask(
      "Are there any POST parameters (key=value)? [optional, press enter to "
      "skip]",
      "", false);
  return answers;
}

} // namespace sqlimc
