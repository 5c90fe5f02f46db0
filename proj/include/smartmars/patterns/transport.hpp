#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "smartmars/error.hpp"
#include "smartmars/model/types.hpp"
#include "smartmars/patterns/comm_object.hpp"
#include "smartmars/patterns/message.hpp"

namespace smartmars::patterns {

using ConnectionId = std::uint64_t;

/// Immediate verdict on a message posted into a channel.
enum class Admission { Accepted, QueueFull, Deactivated, Closed, Malformed };

/// Error a client reports for a refused admission.
Error admission_error(Admission a);

/// Reason a required port cannot be wired to a provided port, if any:
/// "pattern" or "type".
std::optional<std::string> incompatibility(const model::ServicePortSpec& required, const model::ServicePortSpec& provided);
/// True iff pattern kinds and request/answer type names are equal.
bool check_compatibility(const model::ServicePortSpec& required, const model::ServicePortSpec& provided);

/// Provider to client direction of one connection.
class Replier {
public:
    virtual ~Replier() = default;
    /// False once the connection is closed.
    virtual bool reply(Message msg) = 0;
};

/// Server side of a service, reachable by address through a transport.
class Provider {
public:
    virtual ~Provider() = default;
    virtual const model::ServicePortSpec& spec() const = 0;
    virtual void attach(ConnectionId id, std::shared_ptr<Replier> replier) = 0;
    /// Called on the sender's thread; must not block.
    virtual Admission deliver(ConnectionId id, Message msg) = 0;
    virtual void detach(ConnectionId id) = 0;
};

/// Client to provider direction of one connection.
class Channel {
public:
    virtual ~Channel() = default;
    virtual Admission post(Message msg) = 0;
    /// Idempotent; the provider sees a detach.
    virtual void close() = 0;
};

/// Receives provider messages for one connection. Runs on a provider thread
/// and must not block.
using InboundFn = std::function<void(Message)>;
using ChannelOpener = std::function<std::shared_ptr<Channel>(InboundFn)>;

class Transport {
public:
    virtual ~Transport() = default;
    /// Throws Error(InvalidArgument) if the address is taken.
    virtual void bind(const std::string& address, std::shared_ptr<Provider> provider) = 0;
    virtual void unbind(const std::string& address) = 0;
    /// Throws Error(Incompatible) if no live provider is bound at `address`
    /// or its spec is incompatible with `required`.
    virtual std::shared_ptr<Channel> open(const std::string& address, const model::ServicePortSpec& required,
                                          InboundFn inbound) = 0;

    ChannelOpener opener(const std::string& address, const model::ServicePortSpec& required);
};

/// Reference transport: direct calls between ports of one process. With
/// `wire_roundtrip` every message is encoded to a frame and decoded again.
class InProcessTransport final : public Transport {
public:
    explicit InProcessTransport(std::shared_ptr<const TypeTable> types = nullptr, bool wire_roundtrip = false);

    void bind(const std::string& address, std::shared_ptr<Provider> provider) override;
    void unbind(const std::string& address) override;
    std::shared_ptr<Channel> open(const std::string& address, const model::ServicePortSpec& required,
                                  InboundFn inbound) override;

    /// Passes `msg` through the frame codec when round-tripping is enabled.
    Message carry(Message msg) const;

private:
    std::shared_ptr<const TypeTable> types_;
    bool roundtrip_;
    std::mutex mu_;
    std::map<std::string, std::weak_ptr<Provider>> providers_;
    ConnectionId next_id_ = 1;
};

}  // namespace smartmars::patterns
