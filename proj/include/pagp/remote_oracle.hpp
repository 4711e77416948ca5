#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

// types.hpp (and with it Eigen) must precede httplib: the socket headers
// httplib drags in define short macros that corrupt Eigen's templates.
#include "pagp/types.hpp"

#include <httplib.h>
#include <json.hpp>

namespace pagp {

// Any failure talking to or validating the prediction endpoint. Callers are
// expected to catch this and record the failing arm rather than crash.
struct RemoteOracleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class PromptKind { k_shot, scale_only };

inline const char* prompt_kind_name(PromptKind k) {
  return k == PromptKind::k_shot ? "k_shot" : "scale_only";
}

// Values substituted into a prompt template. k_shot uses arm_text plus the
// example pairs; scale_only uses arm_text plus the three scale statistics.
struct PromptFill {
  std::string arm_text;
  std::vector<std::pair<std::string, double>> examples;
  double y_min = 0.0;
  double y_max = 0.0;
  double y_mean = 0.0;
};

inline std::string load_text_asset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_text_asset: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

namespace detail {

inline std::string format_fixed(double v, int decimals) {
  if (!std::isfinite(v))
    throw InputError("render_prompt: non-finite fill value");
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

inline void replace_all(std::string& text, const std::string& token,
                        const std::string& value) {
  std::size_t pos = 0;
  bool found = false;
  while ((pos = text.find(token, pos)) != std::string::npos) {
    text.replace(pos, token.size(), value);
    pos += value.size();
    found = true;
  }
  if (!found)
    throw InputError("render_prompt: template is missing placeholder " + token);
}

}  // namespace detail

// Substitutes the fill into a template. The k_shot template carries a
// three-line schematic example block (lines 1, 2 and K with an ellipsis);
// the renderer swaps that whole block for one numbered line per provided
// example, values formatted to two decimals. Scale statistics use one
// decimal. Everything else in the template is preserved byte-for-byte.
inline std::string render_prompt(PromptKind kind, const std::string& tpl,
                                 const PromptFill& fill) {
  std::string out = tpl;
  if (kind == PromptKind::k_shot) {
    if (fill.examples.empty())
      throw InputError("render_prompt: k_shot needs at least one example");
    const std::string first_marker = "1) \"{cond_1}\" -> {y_1:.2f}";
    const std::string last_marker = "K) \"{cond_K}\" -> {y_K:.2f}";
    const std::size_t begin = out.find(first_marker);
    const std::size_t end = out.find(last_marker);
    if (begin == std::string::npos || end == std::string::npos || end < begin)
      throw InputError("render_prompt: template lacks the k_shot example block");
    std::string block;
    for (std::size_t j = 0; j < fill.examples.size(); ++j) {
      if (j) block += "\n";
      block += std::to_string(j + 1) + ") \"" + fill.examples[j].first +
               "\" -> " + detail::format_fixed(fill.examples[j].second, 2);
    }
    out.replace(begin, end + last_marker.size() - begin, block);
  } else {
    detail::replace_all(out, "{y_min:.1f}", detail::format_fixed(fill.y_min, 1));
    detail::replace_all(out, "{y_max:.1f}", detail::format_fixed(fill.y_max, 1));
    detail::replace_all(out, "{y_mean:.1f}",
                        detail::format_fixed(fill.y_mean, 1));
  }
  detail::replace_all(out, "{arm_text}", fill.arm_text);
  return out;
}

// Validates and extracts the prediction from a response body that must be
// exactly a JSON object carrying a finite "pred_visits" number.
inline double parse_prediction_response(const std::string& body) {
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw RemoteOracleError(std::string("remote oracle: response is not JSON: ") +
                            e.what());
  }
  if (!parsed.is_object() || !parsed.contains("pred_visits"))
    throw RemoteOracleError(
        "remote oracle: response must be {\"pred_visits\": number}");
  const auto& field = parsed["pred_visits"];
  if (!field.is_number())
    throw RemoteOracleError("remote oracle: pred_visits is not a number");
  const double value = field.get<double>();
  if (!std::isfinite(value))
    throw RemoteOracleError("remote oracle: pred_visits is not finite");
  return value;
}

inline std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

struct RemoteEndpoint {
  std::string host;
  int port = 80;
  std::string path = "/";
};

inline RemoteEndpoint parse_endpoint(std::string url) {
  const std::string scheme = "http://";
  if (url.rfind(scheme, 0) == 0) url = url.substr(scheme.size());
  if (url.rfind("https://", 0) == 0)
    throw InputError("parse_endpoint: only plain http endpoints are supported");
  RemoteEndpoint ep;
  const std::size_t slash = url.find('/');
  std::string hostport = slash == std::string::npos ? url : url.substr(0, slash);
  ep.path = slash == std::string::npos ? "/" : url.substr(slash);
  const std::size_t colon = hostport.rfind(':');
  if (colon == std::string::npos) {
    ep.host = hostport;
  } else {
    ep.host = hostport.substr(0, colon);
    try {
      ep.port = std::stoi(hostport.substr(colon + 1));
    } catch (const std::exception&) {
      throw InputError("parse_endpoint: bad port in '" + hostport + "'");
    }
  }
  if (ep.host.empty()) throw InputError("parse_endpoint: empty host");
  return ep;
}

// Blocking client for the prediction endpoint with an optional response
// cache keyed by the exact rendered prompt, so a given arm is queried at
// most once across runs.
class RemoteOracle {
 public:
  explicit RemoteOracle(const std::string& url, std::string cache_dir = "",
                        int timeout_sec = 30)
      : endpoint_(parse_endpoint(url)),
        cache_dir_(std::move(cache_dir)),
        timeout_sec_(timeout_sec) {}

  double predict(PromptKind kind, const std::string& template_text,
                 const PromptFill& fill) {
    last_prompt_ = render_prompt(kind, template_text, fill);
    const std::string cache_path = cache_file(kind, last_prompt_);
    if (!cache_path.empty()) {
      std::ifstream in(cache_path, std::ios::binary);
      if (in) {
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse_prediction_response(buf.str());
      }
    }

    httplib::Client client(endpoint_.host, endpoint_.port);
    client.set_connection_timeout(timeout_sec_);
    client.set_read_timeout(timeout_sec_);
    nlohmann::json request;
    request["prompt"] = last_prompt_;
    const auto res =
        client.Post(endpoint_.path, request.dump(), "application/json");
    if (!res)
      throw RemoteOracleError("remote oracle: transport failure contacting " +
                              endpoint_.host + ":" +
                              std::to_string(endpoint_.port));
    if (res->status != 200)
      throw RemoteOracleError("remote oracle: HTTP status " +
                              std::to_string(res->status));
    const double value = parse_prediction_response(res->body);
    if (!cache_path.empty()) {
      std::ofstream out(cache_path, std::ios::binary);
      out << res->body;
    }
    return value;
  }

  const std::string& last_prompt() const { return last_prompt_; }

 private:
  std::string cache_file(PromptKind kind, const std::string& prompt) const {
    if (cache_dir_.empty()) return {};
    std::error_code ec;
    std::filesystem::create_directories(cache_dir_, ec);
    const std::uint64_t key =
        fnv1a64(std::string(prompt_kind_name(kind)) + '\n' + prompt);
    char name[32];
    std::snprintf(name, sizeof(name), "%016llx.json",
                  static_cast<unsigned long long>(key));
    return (std::filesystem::path(cache_dir_) / name).string();
  }

  RemoteEndpoint endpoint_;
  std::string cache_dir_;
  int timeout_sec_;
  std::string last_prompt_;
};

}  // namespace pagp
