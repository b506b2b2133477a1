#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace vanet {

enum class DisseminationMode : std::uint8_t { CloudGateway, MultiHopV2V, MultiHopV2I };

/// Hybrid-Vehcloud plus the three simplified comparators.
enum class ProtocolKind : std::uint8_t { HybridVehcloud, CmdsLike, ClbpLike, CloudVanetLike };

inline constexpr std::array<ProtocolKind, 4> kAllProtocols{
    ProtocolKind::HybridVehcloud, ProtocolKind::CmdsLike, ProtocolKind::ClbpLike,
    ProtocolKind::CloudVanetLike};

std::string_view to_string(DisseminationMode m);
std::string_view short_name(DisseminationMode m);
std::optional<DisseminationMode> parse_mode(std::string_view s);

/// Display name, e.g. "Hybrid-Vehcloud", "CMDS-like".
std::string_view to_string(ProtocolKind p);
/// Config key, e.g. "hybrid", "cmds".
std::string_view config_name(ProtocolKind p);
/// Accepts either the config key or the display name.
std::optional<ProtocolKind> parse_protocol(std::string_view s);

}  // namespace vanet
