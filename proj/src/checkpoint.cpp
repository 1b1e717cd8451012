#include "veridebate/checkpoint.hpp"

#include <bit>
#include <cstring>

#include <fmt/format.h>

#include "veridebate/errors.hpp"
#include "veridebate/serialization.hpp"

namespace veridebate {

using nlohmann::json;

namespace {

constexpr std::size_t kMagicLen = sizeof(kCheckpointMagic) - 1;

void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

std::uint64_t get_u64(const std::string& in, std::size_t pos) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + b])) << (8 * b);
  return v;
}

}  // namespace

json model_config_to_json(const ModelConfig& c) {
  return {{"text_dim", c.text_dim},   {"role_dim", c.role_dim}, {"gat_layers", c.gat_layers},
          {"gat_hidden", c.gat_hidden}, {"proj_dim", c.proj_dim}, {"heads", c.heads},
          {"interaction_mode", to_string(c.mode)}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.text_dim = j.at("text_dim").get<std::size_t>();
  c.role_dim = j.at("role_dim").get<std::size_t>();
  c.gat_layers = j.at("gat_layers").get<std::size_t>();
  c.gat_hidden = j.at("gat_hidden").get<std::size_t>();
  c.proj_dim = j.at("proj_dim").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.mode = parse_interaction_mode(j.at("interaction_mode").get<std::string>());
  c.validate();
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const AnalysisModel& model, const json& extra) {
  json blocks = json::array();
  for (const auto& b : model.layout().blocks()) {
    blocks.push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}});
  }
  const json header{{"format", 1},
                    {"config", model_config_to_json(model.config())},
                    {"seed", model.seed()},
                    {"param_count", model.parameters().size()},
                    {"labels", {{"real", 0}, {"fake", 1}}},
                    {"blocks", std::move(blocks)},
                    {"metadata", extra}};
  const std::string header_text = header.dump();
  std::string bytes(kCheckpointMagic, kMagicLen);
  put_u64(bytes, header_text.size());
  bytes += header_text;
  bytes.reserve(bytes.size() + 8 * model.parameters().size());
  for (double x : model.parameters()) put_u64(bytes, std::bit_cast<std::uint64_t>(x));
  write_text_atomic(path, bytes);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string bytes = read_text(path);
  const auto fail = [&](std::string_view why) {
    return std::runtime_error(fmt::format("{}: invalid checkpoint: {}", path.string(), why));
  };
  if (bytes.size() < kMagicLen + 8 || std::memcmp(bytes.data(), kCheckpointMagic, kMagicLen) != 0) {
    throw fail("bad magic");
  }
  const std::uint64_t header_len = get_u64(bytes, kMagicLen);
  const std::size_t body = kMagicLen + 8 + header_len;
  if (header_len > bytes.size() || body > bytes.size()) throw fail("truncated header");
  json header;
  try {
    header = json::parse(bytes.substr(kMagicLen + 8, header_len));
  } catch (const json::exception& e) {
    throw fail(e.what());
  }
  const ModelConfig config = model_config_from_json(header.at("config"));
  const auto count = header.at("param_count").get<std::size_t>();
  if (bytes.size() - body != 8 * count) throw fail("parameter payload length mismatch");
  std::vector<double> params(count);
  for (std::size_t k = 0; k < count; ++k) params[k] = std::bit_cast<double>(get_u64(bytes, body + 8 * k));
  AnalysisModel model(config, header.at("seed").get<std::uint64_t>(), std::move(params));
  return {std::move(model), std::move(header)};
}

}  // namespace veridebate
