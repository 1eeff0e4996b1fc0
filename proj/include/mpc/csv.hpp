#ifndef MPC_CSV_HPP
#define MPC_CSV_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mpc::csv {

/// Reads one RFC 4180 record (quoted fields may span lines). Lines starting
/// with '#' outside a record are skipped when `skip_comments` is set.
/// Returns nullopt at end of input.
std::optional<std::vector<std::string>> read_record(std::istream& in,
                                                    bool skip_comments = true);

/// Quotes a field when it contains a separator, quote or newline.
std::string escape(std::string_view field);

/// Shortest round-trip decimal form of `v`.
std::string format_double(double v);

std::optional<double> parse_double(std::string_view text);
std::optional<long> parse_long(std::string_view text);

std::string_view trim(std::string_view s);

}  // namespace mpc::csv

#endif  // MPC_CSV_HPP
