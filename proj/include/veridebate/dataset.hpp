#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "veridebate/domain.hpp"

namespace veridebate {

struct LoadIssue {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct Dataset {
  std::vector<NewsItem> items;
  Language language = Language::En;
  std::vector<LoadIssue> skipped;  // lenient mode only

  std::vector<NewsItem> split(Split s) const;
  std::size_t count(Split s) const;
  /// {real, fake} counts, optionally restricted to one split.
  std::array<std::size_t, 2> label_counts(std::optional<Split> s = std::nullopt) const;
};

struct LoadOptions {
  bool strict = true;
  Language language = Language::En;
  std::optional<Split> default_split;  // for lines without a "split" field
};

/// JSONL, one {id, content, label, split} object per line. id may be a string or
/// an integer; label is "real"/"fake" or 0/1. Blank lines are ignored. In strict
/// mode any malformed line, a duplicate id or an empty file is an error; in
/// lenient mode offending lines are skipped and recorded.
Dataset load_dataset(const std::filesystem::path& path, const LoadOptions& options = {});

void write_dataset_jsonl(const std::filesystem::path& path, std::span<const NewsItem> items);

}  // namespace veridebate
