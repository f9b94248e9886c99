#include "headgs/wire.hpp"

#include "headgs/errors.hpp"

#include <nlohmann/json.hpp>
#include <sodium.h>

#include <cmath>
#include <cstring>

namespace headgs::wire {

using nlohmann::json;

namespace {

json encode_f32_image(const Image& img) {
  std::vector<std::uint8_t> bytes(img.data.size() * sizeof(float));
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const float v = static_cast<float>(img.data[i]);
    std::memcpy(bytes.data() + i * sizeof(float), &v, sizeof(float));
  }
  return {{"data", base64_encode(bytes)}, {"width", img.width}, {"height", img.height}, {"channels", img.channels}};
}

Image decode_f32_image(const json& j, const char* field) {
  if (!j.is_object()) throw ProtocolError(std::string(field) + " must be an object");
  const int w = j.at("width").get<int>(), h = j.at("height").get<int>(), c = j.at("channels").get<int>();
  if (w <= 0 || h <= 0 || c <= 0) throw ProtocolError(std::string(field) + " has invalid dimensions");
  const auto bytes = base64_decode(j.at("data").get<std::string>());
  Image img(w, h, c);
  if (bytes.size() != img.data.size() * sizeof(float))
    throw ProtocolError(std::string(field) + " payload holds " + std::to_string(bytes.size()) + " bytes, expected " +
                        std::to_string(img.data.size() * sizeof(float)));
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    float v;
    std::memcpy(&v, bytes.data() + i * sizeof(float), sizeof(float));
    img.data[i] = v;
  }
  return img;
}

json parse_object(std::string_view body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ProtocolError("payload is not a JSON object");
  return j;
}

void check_version(const json& j) {
  const int v = j.at("version").get<int>();
  if (v != kProtocolVersion)
    throw ProtocolError("protocol version mismatch: got " + std::to_string(v) + ", expected " +
                        std::to_string(kProtocolVersion));
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  const int variant = sodium_base64_VARIANT_ORIGINAL;
  std::string out(sodium_base64_encoded_len(bytes.size(), variant), '\0');
  sodium_bin2base64(out.data(), out.size(), bytes.data(), bytes.size(), variant);
  out.resize(std::strlen(out.c_str()));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::vector<std::uint8_t> out(text.size() / 4 * 3 + 3);
  std::size_t len = 0;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), nullptr, &len, nullptr,
                        sodium_base64_VARIANT_ORIGINAL) != 0)
    throw ProtocolError("invalid base64 payload");
  out.resize(len);
  return out;
}

std::string encode_request(const GuidanceRequest& r) {
  json j;
  j["version"] = kProtocolVersion;
  j["prompt"] = r.prompt;
  j["negative_prompt"] = r.negative_prompt;
  j["cfg"] = r.cfg;
  j["cfg_neg"] = r.cfg_neg;
  if (r.timestep) j["timestep"] = *r.timestep;
  j["image"] = encode_f32_image(r.image);
  if (!r.condition.data.empty()) {
    const auto png = encode_png(r.condition);
    j["condition"] = {{"png", base64_encode(png)}, {"width", r.condition.width}, {"height", r.condition.height}};
  }
  return j.dump(2);
}

GuidanceRequest decode_request(std::string_view body) {
  try {
    const json j = parse_object(body);
    check_version(j);
    GuidanceRequest r;
    r.prompt = j.at("prompt").get<std::string>();
    r.negative_prompt = j.at("negative_prompt").get<std::string>();
    r.cfg = j.at("cfg").get<double>();
    r.cfg_neg = j.at("cfg_neg").get<double>();
    if (j.contains("timestep")) r.timestep = j.at("timestep").get<int>();
    r.image = decode_f32_image(j.at("image"), "image");
    if (j.contains("condition")) {
      const auto png = base64_decode(j.at("condition").at("png").get<std::string>());
      r.condition = decode_png(png);
    }
    r.validate();
    return r;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed request: ") + e.what());
  } catch (const ProtocolError&) {
    throw;
  } catch (const Error& e) {
    throw ProtocolError(std::string("invalid request: ") + e.what());
  }
}

std::string encode_response(const GuidanceResponse& r) {
  json j;
  j["version"] = kProtocolVersion;
  j["timestep"] = r.timestep;
  j["gradient"] = encode_f32_image(r.gradient);
  return j.dump(2);
}

GuidanceResponse decode_response(std::string_view body) {
  try {
    const json j = parse_object(body);
    check_version(j);
    GuidanceResponse r;
    r.provider = "remote";
    r.timestep = j.at("timestep").get<int>();
    r.gradient = decode_f32_image(j.at("gradient"), "gradient");
    if (r.gradient.channels != 3) throw ProtocolError("gradient must have 3 channels");
    for (double v : r.gradient.data)
      if (!std::isfinite(v)) throw ProtocolError("gradient contains non-finite values");
    return r;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed response: ") + e.what());
  }
}

std::string encode_health() { return json{{"status", "ok"}, {"version", kProtocolVersion}}.dump(); }

}  // namespace headgs::wire
