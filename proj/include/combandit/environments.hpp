#pragma once

// Reward-generating environments. A draw produces one Interaction: the
// round's context plus the hidden per-arm payout vector. Hidden payouts are
// only ever read by evaluation and feedback code — policies never see them
// except through their own updates.
//
// Replay environments are built from delimiter-separated text files with a
// header row; the schema (which columns mean what) is declared by the caller,
// never sniffed. Environments are immutable after construction and safe to
// share read-only across concurrent runs.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "combandit/core.hpp"
#include "combandit/rng.hpp"

namespace combandit {

struct Interaction {
  ContextVector context;
  RealRewardVector hidden_rewards;
};

// Shape and origin facts every report carries.
struct EnvMetadata {
  std::string kind;                     // synthetic | classification | ratings
  std::size_t arm_count = 0;
  std::size_t context_dim = 0;
  std::size_t row_count = 0;            // replay support size (rows or users); 0 for synthetic
  std::vector<std::string> arm_labels;  // original label/item per arm (replay only)
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual Interaction draw(RngStream& rng) const = 0;
  virtual std::size_t arm_count() const = 0;
  virtual std::size_t context_dim() const = 0;
  virtual const EnvMetadata& metadata() const = 0;
  // Per-round success probability of the best possible super-arm; only
  // available where the reward distribution is known (synthetic).
  virtual std::optional<double> oracle_success(std::size_t k) const {
    (void)k;
    return std::nullopt;
  }
};

// The per-round ceiling for the overall reward: 1 - prod(1 - mu_a) over the
// k largest success probabilities.
inline double oracle_success_probability(std::span<const double> mu, std::size_t k) {
  if (k < 1 || k > mu.size())
    throw std::invalid_argument("oracle_success_probability: k out of range");
  std::vector<double> sorted(mu.begin(), mu.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double miss = 1.0;
  for (std::size_t i = 0; i < k; ++i) miss *= 1.0 - sorted[i];
  return 1.0 - miss;
}

// ---- synthetic -------------------------------------------------------------

class SyntheticBernoulliEnv final : public Environment {
 public:
  explicit SyntheticBernoulliEnv(std::vector<double> mu, std::size_t context_dim = 0)
      : mu_(std::move(mu)) {
    if (mu_.empty())
      throw std::invalid_argument("synthetic env needs at least one arm");
    for (const double p : mu_)
      if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("synthetic env: mu values must be in [0, 1]");
    meta_.kind = "synthetic";
    meta_.arm_count = mu_.size();
    meta_.context_dim = context_dim;
  }

  Interaction draw(RngStream& rng) const override {
    Interaction it;
    it.context.assign(meta_.context_dim, 0.0);
    it.hidden_rewards.resize(mu_.size());
    // Exactly one uniform per arm per draw, so cell-to-cell stream alignment
    // is independent of the outcomes.
    for (std::size_t a = 0; a < mu_.size(); ++a)
      it.hidden_rewards[a] = rng.next_double() < mu_[a] ? 1.0 : 0.0;
    return it;
  }

  std::size_t arm_count() const override { return mu_.size(); }
  std::size_t context_dim() const override { return meta_.context_dim; }
  const EnvMetadata& metadata() const override { return meta_; }

  std::optional<double> oracle_success(std::size_t k) const override {
    return oracle_success_probability(mu_, k);
  }

  const std::vector<double>& mu() const { return mu_; }

 private:
  std::vector<double> mu_;
  EnvMetadata meta_;
};

// ---- delimited-text plumbing -----------------------------------------------

namespace detail {

inline std::string trim(std::string_view s) {
  const auto issp = [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
  };
  std::size_t b = 0, e = s.size();
  while (b < e && issp(s[b])) ++b;
  while (e > b && issp(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_line(const std::string& line, char delimiter) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == delimiter) {
      cells.push_back(trim(std::string_view(line).substr(start, i - start)));
      start = i + 1;
    }
  }
  return cells;
}

[[noreturn]] inline void load_error(const std::string& path, std::size_t line_no,
                                    const std::string& message) {
  throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + message);
}

inline double parse_cell_double(const std::string& cell, const std::string& path,
                                std::size_t line_no, const std::string& column) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || cell.empty())
    load_error(path, line_no, "non-numeric value '" + cell + "' in column '" + column + "'");
  return value;
}

inline bool parses_as_double(const std::string& s, double& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

// Deterministic label ordering: numeric when every label parses as a number
// (ties between distinct spellings of the same value fall back to the text),
// lexicographic otherwise.
inline std::vector<std::string> order_labels(std::vector<std::string> labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  bool all_numeric = true;
  std::vector<std::pair<double, std::string>> keyed;
  keyed.reserve(labels.size());
  for (const auto& s : labels) {
    double v = 0.0;
    if (!parses_as_double(s, v)) {
      all_numeric = false;
      break;
    }
    keyed.emplace_back(v, s);
  }
  if (all_numeric) {
    std::sort(keyed.begin(), keyed.end());
    for (std::size_t i = 0; i < keyed.size(); ++i) labels[i] = keyed[i].second;
  }
  return labels;
}

struct DelimitedFile {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // trimmed cells
  std::vector<std::size_t> line_numbers;       // 1-based source line per row
};

inline DelimitedFile read_delimited(const std::string& path, char delimiter) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  DelimitedFile file;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;  // tolerate blank lines / trailing newline
    auto cells = split_line(line, delimiter);
    if (file.header.empty()) {
      file.header = std::move(cells);
      continue;
    }
    if (cells.size() != file.header.size())
      load_error(path, line_no,
                 "expected " + std::to_string(file.header.size()) + " cells, got " +
                     std::to_string(cells.size()));
    file.rows.push_back(std::move(cells));
    file.line_numbers.push_back(line_no);
  }
  if (file.header.empty()) throw std::runtime_error(path + ": empty file (no header)");
  return file;
}

inline std::size_t column_index(const DelimitedFile& file, const std::string& name,
                                const std::string& path) {
  for (std::size_t i = 0; i < file.header.size(); ++i)
    if (file.header[i] == name) return i;
  throw std::runtime_error(path + ": unknown column '" + name + "'");
}

}  // namespace detail

// ---- classification replay --------------------------------------------------

// Which columns of a classification table carry features and which one the
// class label. context_columns = {"*"} means "every column except the label".
struct TableSchema {
  char delimiter = ',';
  std::string label_column;
  std::vector<std::string> context_columns{"*"};
};

class ClassificationReplayEnv final : public Environment {
 public:
  struct Row {
    ContextVector context;
    ArmId label;
  };

  ClassificationReplayEnv(std::vector<Row> rows, EnvMetadata meta)
      : rows_(std::move(rows)), meta_(std::move(meta)) {
    if (rows_.empty())
      throw std::invalid_argument("classification env needs at least one row");
  }

  Interaction draw(RngStream& rng) const override {
    const Row& row = rows_[rng.next_below(rows_.size())];
    Interaction it;
    it.context = row.context;
    it.hidden_rewards.assign(meta_.arm_count, 0.0);
    it.hidden_rewards[row.label] = 1.0;  // one-hot: reward iff the true class
    return it;
  }

  std::size_t arm_count() const override { return meta_.arm_count; }
  std::size_t context_dim() const override { return meta_.context_dim; }
  const EnvMetadata& metadata() const override { return meta_; }
  const std::vector<Row>& rows() const { return rows_; }

 private:
  std::vector<Row> rows_;
  EnvMetadata meta_;
};

inline ClassificationReplayEnv load_classification_table(const std::string& path,
                                                         const TableSchema& schema) {
  if (schema.label_column.empty())
    throw std::invalid_argument("classification schema needs a label column");
  const auto file = detail::read_delimited(path, schema.delimiter);
  const std::size_t label_idx = detail::column_index(file, schema.label_column, path);

  std::vector<std::size_t> ctx_idx;
  const bool all_columns =
      schema.context_columns.size() == 1 && schema.context_columns[0] == "*";
  if (all_columns) {
    for (std::size_t i = 0; i < file.header.size(); ++i)
      if (i != label_idx) ctx_idx.push_back(i);
  } else {
    for (const auto& name : schema.context_columns)
      ctx_idx.push_back(detail::column_index(file, name, path));
  }

  if (file.rows.empty()) throw std::runtime_error(path + ": no data rows");

  std::vector<std::string> raw_labels;
  raw_labels.reserve(file.rows.size());
  for (const auto& row : file.rows) raw_labels.push_back(row[label_idx]);
  const std::vector<std::string> ordered = detail::order_labels(raw_labels);
  std::unordered_map<std::string, ArmId> label_to_arm;
  for (std::size_t i = 0; i < ordered.size(); ++i) label_to_arm[ordered[i]] = i;

  std::vector<ClassificationReplayEnv::Row> rows;
  rows.reserve(file.rows.size());
  for (std::size_t r = 0; r < file.rows.size(); ++r) {
    ClassificationReplayEnv::Row out;
    out.context.reserve(ctx_idx.size());
    for (const std::size_t c : ctx_idx)
      out.context.push_back(detail::parse_cell_double(file.rows[r][c], path,
                                                      file.line_numbers[r],
                                                      file.header[c]));
    out.label = label_to_arm.at(file.rows[r][label_idx]);
    rows.push_back(std::move(out));
  }

  EnvMetadata meta;
  meta.kind = "classification";
  meta.arm_count = ordered.size();
  meta.context_dim = ctx_idx.size();
  meta.row_count = rows.size();
  meta.arm_labels = ordered;
  return ClassificationReplayEnv(std::move(rows), std::move(meta));
}

// ---- ratings replay ----------------------------------------------------------

// Ratings file schema plus the optional per-user context side table.
struct RatingsSchema {
  char delimiter = ',';
  std::string user_column = "user";
  std::string item_column = "item";
  std::string rating_column = "rating";
  double threshold = 4.0;  // reward 1 iff rating >= threshold
  std::string user_context_path;                 // empty = context-free
  std::string user_context_user_column = "user";
  std::vector<std::string> user_context_columns{"*"};
};

class RatingsReplayEnv final : public Environment {
 public:
  struct UserRow {
    ContextVector context;
    std::vector<ArmId> liked;  // items rated at/above the threshold
  };

  RatingsReplayEnv(std::vector<UserRow> users, EnvMetadata meta)
      : users_(std::move(users)), meta_(std::move(meta)) {
    if (users_.empty())
      throw std::invalid_argument("ratings env needs at least one user");
  }

  Interaction draw(RngStream& rng) const override {
    const UserRow& user = users_[rng.next_below(users_.size())];
    Interaction it;
    it.context = user.context;
    // Items the user never rated stay 0: unknown is read as unsatisfied.
    it.hidden_rewards.assign(meta_.arm_count, 0.0);
    for (const ArmId a : user.liked) it.hidden_rewards[a] = 1.0;
    return it;
  }

  std::size_t arm_count() const override { return meta_.arm_count; }
  std::size_t context_dim() const override { return meta_.context_dim; }
  const EnvMetadata& metadata() const override { return meta_; }
  const std::vector<UserRow>& users() const { return users_; }

 private:
  std::vector<UserRow> users_;
  EnvMetadata meta_;
};

inline RatingsReplayEnv load_ratings_table(const std::string& path,
                                           const RatingsSchema& schema) {
  const auto file = detail::read_delimited(path, schema.delimiter);
  const std::size_t user_idx = detail::column_index(file, schema.user_column, path);
  const std::size_t item_idx = detail::column_index(file, schema.item_column, path);
  const std::size_t rating_idx = detail::column_index(file, schema.rating_column, path);
  if (file.rows.empty()) throw std::runtime_error(path + ": no data rows");

  std::vector<std::string> user_keys, item_keys;
  user_keys.reserve(file.rows.size());
  item_keys.reserve(file.rows.size());
  for (const auto& row : file.rows) {
    user_keys.push_back(row[user_idx]);
    item_keys.push_back(row[item_idx]);
  }
  const std::vector<std::string> users = detail::order_labels(user_keys);
  const std::vector<std::string> items = detail::order_labels(item_keys);
  std::unordered_map<std::string, std::size_t> user_to_row;
  std::unordered_map<std::string, ArmId> item_to_arm;
  for (std::size_t i = 0; i < users.size(); ++i) user_to_row[users[i]] = i;
  for (std::size_t i = 0; i < items.size(); ++i) item_to_arm[items[i]] = i;

  std::vector<RatingsReplayEnv::UserRow> user_rows(users.size());
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(file.rows.size() * 2);
  for (std::size_t r = 0; r < file.rows.size(); ++r) {
    const std::size_t u = user_to_row.at(file.rows[r][user_idx]);
    const ArmId a = item_to_arm.at(file.rows[r][item_idx]);
    const std::uint64_t key = (static_cast<std::uint64_t>(u) << 32) |
                              static_cast<std::uint64_t>(a);
    if (!seen.insert(key).second)
      detail::load_error(path, file.line_numbers[r],
                         "duplicate (user, item) pair: ground truth ambiguous");
    const double rating = detail::parse_cell_double(
        file.rows[r][rating_idx], path, file.line_numbers[r], schema.rating_column);
    if (rating >= schema.threshold) user_rows[u].liked.push_back(a);
  }
  for (auto& row : user_rows) std::sort(row.liked.begin(), row.liked.end());

  std::size_t dim = 0;
  if (!schema.user_context_path.empty()) {
    const auto ctx_file =
        detail::read_delimited(schema.user_context_path, schema.delimiter);
    const std::size_t key_idx = detail::column_index(
        ctx_file, schema.user_context_user_column, schema.user_context_path);
    std::vector<std::size_t> ctx_idx;
    const bool all_columns = schema.user_context_columns.size() == 1 &&
                             schema.user_context_columns[0] == "*";
    if (all_columns) {
      for (std::size_t i = 0; i < ctx_file.header.size(); ++i)
        if (i != key_idx) ctx_idx.push_back(i);
    } else {
      for (const auto& name : schema.user_context_columns)
        ctx_idx.push_back(
            detail::column_index(ctx_file, name, schema.user_context_path));
    }
    dim = ctx_idx.size();

    std::unordered_map<std::string, ContextVector> contexts;
    for (std::size_t r = 0; r < ctx_file.rows.size(); ++r) {
      ContextVector v;
      v.reserve(ctx_idx.size());
      for (const std::size_t c : ctx_idx)
        v.push_back(detail::parse_cell_double(ctx_file.rows[r][c],
                                              schema.user_context_path,
                                              ctx_file.line_numbers[r],
                                              ctx_file.header[c]));
      contexts[ctx_file.rows[r][key_idx]] = std::move(v);
    }
    for (std::size_t u = 0; u < users.size(); ++u) {
      const auto found = contexts.find(users[u]);
      if (found == contexts.end())
        throw std::runtime_error(schema.user_context_path + ": no context row for user '" +
                                 users[u] + "'");
      user_rows[u].context = found->second;
    }
  }

  EnvMetadata meta;
  meta.kind = "ratings";
  meta.arm_count = items.size();
  meta.context_dim = dim;
  meta.row_count = users.size();
  meta.arm_labels = items;
  return RatingsReplayEnv(std::move(user_rows), std::move(meta));
}

}  // namespace combandit
