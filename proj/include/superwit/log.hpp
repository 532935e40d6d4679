#pragma once

#include <functional>
#include <string_view>

namespace superwit {

using WarningSink = std::function<void(std::string_view)>;

/// Route library warnings (variance clamps, truncation notes). Defaults to stderr.
void set_warning_sink(WarningSink sink);
void warn(std::string_view message);

}  // namespace superwit
