#include "veridebate/dataset.hpp"

#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "veridebate/errors.hpp"
#include "veridebate/serialization.hpp"

namespace veridebate {

using nlohmann::json;

std::vector<NewsItem> Dataset::split(Split s) const {
  std::vector<NewsItem> out;
  for (const auto& item : items) {
    if (item.split == s) out.push_back(item);
  }
  return out;
}

std::size_t Dataset::count(Split s) const {
  std::size_t n = 0;
  for (const auto& item : items) n += item.split == s ? 1 : 0;
  return n;
}

std::array<std::size_t, 2> Dataset::label_counts(std::optional<Split> s) const {
  std::array<std::size_t, 2> out{0, 0};
  for (const auto& item : items) {
    if (s && item.split != s) continue;
    if (item.label) ++out[static_cast<std::size_t>(label_index(*item.label))];
  }
  return out;
}

namespace {

NewsItem parse_line(const std::string& line, const LoadOptions& options) {
  const json j = json::parse(line);
  if (!j.is_object()) throw std::invalid_argument("line is not a JSON object");
  NewsItem item;
  const json& id = j.at("id");
  if (id.is_string()) item.id = id.get<std::string>();
  else if (id.is_number_integer()) item.id = std::to_string(id.get<long long>());
  else throw std::invalid_argument("id must be a string or an integer");
  if (item.id.empty()) throw std::invalid_argument("empty id");

  item.content = j.at("content").get<std::string>();
  if (is_blank(item.content)) throw std::invalid_argument("blank content");

  const json& label = j.at("label");
  if (label.is_string()) {
    item.label = parse_label(label.get<std::string>());
  } else if (label.is_number_integer()) {
    const auto v = label.get<long long>();
    if (v != 0 && v != 1) throw std::invalid_argument(fmt::format("label {} is not 0 or 1", v));
    item.label = static_cast<Label>(v);
  } else {
    throw std::invalid_argument("label must be \"real\"/\"fake\" or 0/1");
  }

  if (j.contains("split") && !j.at("split").is_null()) {
    item.split = parse_split(j.at("split").get<std::string>());
  } else if (options.default_split) {
    item.split = options.default_split;
  } else {
    throw std::invalid_argument("missing split");
  }
  return item;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path, const LoadOptions& options) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const std::exception& e) {
    throw PreconditionError(fmt::format("cannot read dataset {}: {}", path.string(), e.what()));
  }
  Dataset ds;
  ds.language = options.language;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto reject = [&](std::string message) {
    if (options.strict) throw PreconditionError(fmt::format("{}:{}: {}", path.string(), line_no, message));
    ds.skipped.push_back({line_no, std::move(message)});
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) continue;
    NewsItem item;
    try {
      item = parse_line(line, options);
    } catch (const std::exception& e) {
      reject(fmt::format("malformed line: {}", e.what()));
      continue;
    }
    if (!seen.insert(item.id).second) {
      reject(fmt::format("duplicate id '{}'", item.id));
      continue;
    }
    ds.items.push_back(std::move(item));
  }
  if (ds.items.empty() && options.strict) throw PreconditionError(fmt::format("{}: no items", path.string()));
  return ds;
}

void write_dataset_jsonl(const std::filesystem::path& path, std::span<const NewsItem> items) {
  std::string out;
  for (const auto& item : items) {
    json j{{"id", item.id}, {"content", item.content}};
    j["label"] = item.label ? json(std::string(to_string(*item.label))) : json(nullptr);
    j["split"] = item.split ? json(std::string(to_string(*item.split))) : json(nullptr);
    out += j.dump() + "\n";
  }
  write_text_atomic(path, out);
}

}  // namespace veridebate
