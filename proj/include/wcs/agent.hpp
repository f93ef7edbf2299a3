// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <utility>

#include "wcs/chat.hpp"
#include "wcs/provider.hpp"

namespace wcs {

/// The piece both specialized agents share: sends the full (redacted)
/// history to the provider, appends the raw response as a runtime entry,
/// and returns the response with private terms restored.
class AgentClient {
public:
    AgentClient(ProviderPtr provider, std::string model, AliasTable aliases = {},
                std::optional<double> temperature = std::nullopt)
        : provider_(std::move(provider)),
          model_(std::move(model)),
          aliases_(std::move(aliases)),
          temperature_(temperature) {}

    const AliasTable& aliases() const { return aliases_; }
    Provider& provider() { return *provider_; }

    std::string exchange(ChatHistory& history) {
        CompletionRequest request;
        request.model = model_;
        request.messages = history.render_messages(aliases_);
        request.temperature = temperature_;
        const std::string raw = provider_->complete(request);
        history.append_runtime(Role::Assistant, raw);
        return restore(raw, aliases_);
    }

private:
    ProviderPtr provider_;
    std::string model_;
    AliasTable aliases_;
    std::optional<double> temperature_;
};

}  // namespace wcs
