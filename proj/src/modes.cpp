#include "vanet/modes.hpp"

namespace vanet {

std::string_view to_string(DisseminationMode m) {
    switch (m) {
        case DisseminationMode::CloudGateway: return "CloudGateway";
        case DisseminationMode::MultiHopV2V: return "MultiHopV2V";
        case DisseminationMode::MultiHopV2I: return "MultiHopV2I";
    }
    return "?";
}

std::string_view short_name(DisseminationMode m) {
    switch (m) {
        case DisseminationMode::CloudGateway: return "C";
        case DisseminationMode::MultiHopV2V: return "V";
        case DisseminationMode::MultiHopV2I: return "I";
    }
    return "?";
}

std::optional<DisseminationMode> parse_mode(std::string_view s) {
    for (const auto m : {DisseminationMode::CloudGateway, DisseminationMode::MultiHopV2V,
                         DisseminationMode::MultiHopV2I})
        if (s == to_string(m) || s == short_name(m)) return m;
    return std::nullopt;
}

std::string_view to_string(ProtocolKind p) {
    switch (p) {
        case ProtocolKind::HybridVehcloud: return "Hybrid-Vehcloud";
        case ProtocolKind::CmdsLike: return "CMDS-like";
        case ProtocolKind::ClbpLike: return "CLBP-like";
        case ProtocolKind::CloudVanetLike: return "CloudVANET-like";
    }
    return "?";
}

std::string_view config_name(ProtocolKind p) {
    switch (p) {
        case ProtocolKind::HybridVehcloud: return "hybrid";
        case ProtocolKind::CmdsLike: return "cmds";
        case ProtocolKind::ClbpLike: return "clbp";
        case ProtocolKind::CloudVanetLike: return "cloudvanet";
    }
    return "?";
}

std::optional<ProtocolKind> parse_protocol(std::string_view s) {
    for (const auto p : kAllProtocols)
        if (s == to_string(p) || s == config_name(p)) return p;
    return std::nullopt;
}

}  // namespace vanet
