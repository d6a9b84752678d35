#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mimosa/betabin.hpp"
#include "mimosa/dirmult.hpp"

namespace mimosa {

/// Header subject_id,n_u,N_u,n_s,N_s. Errors name `source` and the 1-based
/// line; duplicate ids and invalid counts throw ValidationError.
std::vector<CountPair> parse_univariate(std::istream& in, const std::string& source);
std::vector<CountPair> read_univariate(const std::filesystem::path& path);
void write_univariate(std::ostream& out, const std::vector<CountPair>& records);

/// Long format subject_id,condition,category,count with condition in
/// {stim, unstim}. Categories are ordered by sorted label, subjects by
/// first appearance. Missing blocks or differing category sets throw
/// SchemaError.
std::vector<MultiCountPair> parse_multivariate(std::istream& in, const std::string& source);
std::vector<MultiCountPair> read_multivariate(const std::filesystem::path& path);
void write_multivariate(std::ostream& out, const std::vector<MultiCountPair>& records);

struct SubjectLabel {
  std::string subject_id;
  int true_z = 0;
};

/// Header subject_id,true_z with true_z in {0, 1}.
std::vector<SubjectLabel> parse_labels(std::istream& in, const std::string& source);
std::vector<SubjectLabel> read_labels(const std::filesystem::path& path);
void write_labels(std::ostream& out, const std::vector<std::string>& ids,
                  const std::vector<int>& true_z);

/// Whole-file helpers; throw ValidationError when the file cannot be opened.
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace mimosa
