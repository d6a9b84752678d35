#include "mimosa/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "mimosa/error.hpp"

namespace mimosa {

namespace {

std::vector<std::string> split_row(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string where(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

long long parse_count(const std::string& s, const std::string& at, const char* field) {
  long long v = 0;
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end)
    throw ValidationError(at + "field " + field + " is not an integer: '" + s + "'");
  return v;
}

// Reads the header and yields non-empty data rows with their line numbers.
template <class F>
void for_each_row(std::istream& in, const std::string& source,
                  const std::vector<std::string>& header, F&& f) {
  std::string line;
  std::size_t lineno = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> row = split_row(line);
    if (!seen_header) {
      if (row != header) {
        std::string want;
        for (std::size_t k = 0; k < header.size(); ++k) want += (k ? "," : "") + header[k];
        throw SchemaError(where(source, lineno) + "expected header " + want);
      }
      seen_header = true;
      continue;
    }
    if (row.size() != header.size())
      throw ValidationError(where(source, lineno) + "expected " +
                            std::to_string(header.size()) + " fields, found " +
                            std::to_string(row.size()));
    for (const std::string& field : row)
      if (field.empty()) throw ValidationError(where(source, lineno) + "missing field");
    f(row, lineno);
  }
  if (!seen_header) throw SchemaError(source + ": empty file");
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

}  // namespace

std::vector<CountPair> parse_univariate(std::istream& in, const std::string& source) {
  std::vector<CountPair> out;
  std::unordered_set<std::string> ids;
  for_each_row(in, source, {"subject_id", "n_u", "N_u", "n_s", "N_s"},
               [&](const std::vector<std::string>& row, std::size_t lineno) {
                 const std::string at = where(source, lineno);
                 CountPair y;
                 y.subject_id = row[0];
                 y.n_u = parse_count(row[1], at, "n_u");
                 y.N_u = parse_count(row[2], at, "N_u");
                 y.n_s = parse_count(row[3], at, "n_s");
                 y.N_s = parse_count(row[4], at, "N_s");
                 try {
                   validate(y);
                 } catch (const ValidationError& e) {
                   throw ValidationError(at + e.what());
                 }
                 if (!ids.insert(y.subject_id).second)
                   throw ValidationError(at + "duplicate subject_id '" + y.subject_id + "'");
                 out.push_back(std::move(y));
               });
  return out;
}

std::vector<CountPair> read_univariate(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return parse_univariate(in, path.string());
}

void write_univariate(std::ostream& out, const std::vector<CountPair>& records) {
  out << "subject_id,n_u,N_u,n_s,N_s\n";
  for (const CountPair& y : records)
    out << y.subject_id << ',' << y.n_u << ',' << y.N_u << ',' << y.n_s << ',' << y.N_s
        << '\n';
}

std::vector<MultiCountPair> parse_multivariate(std::istream& in, const std::string& source) {
  // subject -> condition (0 unstim, 1 stim) -> label -> count
  std::map<std::string, std::map<int, std::map<std::string, long long>>> blocks;
  std::vector<std::string> first_seen;
  for_each_row(in, source, {"subject_id", "condition", "category", "count"},
               [&](const std::vector<std::string>& row, std::size_t lineno) {
                 const std::string at = where(source, lineno);
                 int cond = 0;
                 if (row[1] == "stim")
                   cond = 1;
                 else if (row[1] != "unstim")
                   throw ValidationError(at + "condition must be stim or unstim, found '" +
                                         row[1] + "'");
                 const long long c = parse_count(row[3], at, "count");
                 if (c < 0) throw ValidationError(at + "count must be non-negative");
                 auto [it, fresh] = blocks.try_emplace(row[0]);
                 if (fresh) first_seen.push_back(row[0]);
                 if (!it->second[cond].emplace(row[2], c).second)
                   throw ValidationError(at + "duplicate category '" + row[2] + "' for " +
                                         row[0] + "/" + row[1]);
               });

  std::vector<MultiCountPair> out;
  const std::set<std::string>* reference = nullptr;
  std::set<std::string> ref_labels;
  for (const std::string& id : first_seen) {
    auto& conds = blocks[id];
    if (!conds.count(0) || !conds.count(1))
      throw SchemaError(source + ": subject '" + id + "' lacks a " +
                        (conds.count(0) ? "stim" : "unstim") + " block");
    std::set<std::string> lu, ls;
    for (const auto& [k, v] : conds[0]) lu.insert(k);
    for (const auto& [k, v] : conds[1]) ls.insert(k);
    if (lu != ls)
      throw SchemaError(source + ": subject '" + id +
                        "' has different categories under stim and unstim");
    if (!reference) {
      ref_labels = lu;
      reference = &ref_labels;
    } else if (lu != *reference) {
      throw SchemaError(source + ": subject '" + id +
                        "' has a category set that differs from other subjects");
    }
    MultiCountPair y;
    y.subject_id = id;
    for (const auto& [label, count] : conds[0]) {  // std::map iterates sorted labels
      y.category_labels.push_back(label);
      y.n_u.push_back(count);
      y.n_s.push_back(conds[1][label]);
    }
    try {
      validate(y);
    } catch (const ValidationError& e) {
      throw ValidationError(source + ": " + e.what());
    }
    out.push_back(std::move(y));
  }
  return out;
}

std::vector<MultiCountPair> read_multivariate(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return parse_multivariate(in, path.string());
}

void write_multivariate(std::ostream& out, const std::vector<MultiCountPair>& records) {
  out << "subject_id,condition,category,count\n";
  for (const MultiCountPair& y : records) {
    for (std::size_t k = 0; k < y.categories(); ++k)
      out << y.subject_id << ",unstim," << y.category_labels[k] << ',' << y.n_u[k] << '\n';
    for (std::size_t k = 0; k < y.categories(); ++k)
      out << y.subject_id << ",stim," << y.category_labels[k] << ',' << y.n_s[k] << '\n';
  }
}

std::vector<SubjectLabel> parse_labels(std::istream& in, const std::string& source) {
  std::vector<SubjectLabel> out;
  std::unordered_set<std::string> ids;
  for_each_row(in, source, {"subject_id", "true_z"},
               [&](const std::vector<std::string>& row, std::size_t lineno) {
                 const std::string at = where(source, lineno);
                 const long long z = parse_count(row[1], at, "true_z");
                 if (z != 0 && z != 1) throw ValidationError(at + "true_z must be 0 or 1");
                 if (!ids.insert(row[0]).second)
                   throw ValidationError(at + "duplicate subject_id '" + row[0] + "'");
                 out.push_back({row[0], static_cast<int>(z)});
               });
  return out;
}

std::vector<SubjectLabel> read_labels(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return parse_labels(in, path.string());
}

void write_labels(std::ostream& out, const std::vector<std::string>& ids,
                  const std::vector<int>& true_z) {
  out << "subject_id,true_z\n";
  for (std::size_t i = 0; i < ids.size(); ++i) out << ids[i] << ',' << true_z[i] << '\n';
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
}

}  // namespace mimosa
