#include "mpc/core.hpp"

#include <algorithm>
#include <cctype>

namespace mpc {

OwnerCategory parse_category(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  for (auto c : kAllCategories) {
    std::string s(short_name(c));
    std::string l(long_name(c));
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    std::transform(l.begin(), l.end(), l.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (lower == s || lower == l) return c;
  }
  if (lower == "adjacent") return OwnerCategory::Adjacents;
  if (lower == "permit") return OwnerCategory::Permits;
  throw std::invalid_argument("unknown owner category '" + std::string(text) + "'");
}

std::string transition_label(Transition t) {
  return std::string(short_name(t.from)) + "->" + std::string(short_name(t.to));
}

std::string_view rule_name(Rule r) {
  switch (r) {
    case Rule::NonFinite: return "non-finite entry";
    case Rule::OutOfRange: return "entry outside [0,1]";
    case Rule::RowSum: return "row does not sum to 1";
    case Rule::StructuralZero: return "structural zero is nonzero";
    case Rule::AbsorbingRow: return "permits row is not absorbing";
  }
  return "unknown";
}

std::string Violation::describe() const {
  std::ostringstream os;
  os << rule_name(rule) << " at row " << long_name(category_at(row));
  if (col >= 0) os << ", column " << long_name(category_at(col));
  os << " (deviation " << deviation << ")";
  return os.str();
}

namespace {

std::string join_violations(const std::vector<Violation>& v) {
  std::string msg = "invalid transition matrix: ";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) msg += "; ";
    msg += v[i].describe();
  }
  return msg;
}

}  // namespace

ValidationError::ValidationError(std::vector<Violation> violations)
    : std::invalid_argument(join_violations(violations)),
      violations_(std::move(violations)) {}

}  // namespace mpc
