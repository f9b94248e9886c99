#pragma once

#include "headgs/guidance.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace headgs::wire {

inline constexpr int kProtocolVersion = 1;

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// JSON body of POST /v1/gradient. Images travel as base64 little-endian f32
/// (interleaved H x W x C) and the condition as a base64 PNG.
std::string encode_request(const GuidanceRequest& request);
GuidanceRequest decode_request(std::string_view body);

std::string encode_response(const GuidanceResponse& response);
/// Throws ProtocolError on malformed payloads, version mismatch or non-finite
/// gradients.
GuidanceResponse decode_response(std::string_view body);

std::string encode_health();

}  // namespace headgs::wire
