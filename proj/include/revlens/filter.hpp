#pragma once

#include <string>
#include <string_view>

namespace revlens {

// Hides chain-of-thought scaffolding: when enabled and the case-sensitive
// marker "FINAL OUTPUT" occurs, keeps only the text after its last
// occurrence, minus an emphasis closer glued to the marker and any leading
// whitespace or sentence punctuation (. , : ; ! ? and CJK equivalents).
// List markers and quotes are kept. Otherwise returns raw unchanged.
std::string filter_final_output(std::string_view raw, bool enabled);

} // namespace revlens
