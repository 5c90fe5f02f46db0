#include "smartmars/patterns/transport.hpp"

#include <atomic>

#include "smartmars/error.hpp"
#include "smartmars/patterns/codec.hpp"

namespace smartmars::patterns {

Error admission_error(Admission a) {
    switch (a) {
        case Admission::QueueFull: return Error(ErrorCode::QueueFull);
        case Admission::Deactivated: return Error(ErrorCode::ServiceDeactivated);
        case Admission::Malformed: return Error(ErrorCode::TypeMismatch, "rejected by provider");
        case Admission::Closed:
        case Admission::Accepted: break;
    }
    return Error(ErrorCode::Disconnected);
}

std::optional<std::string> incompatibility(const model::ServicePortSpec& required, const model::ServicePortSpec& provided) {
    if (required.pattern != provided.pattern) return "pattern";
    if (required.request_type != provided.request_type || required.answer_type != provided.answer_type) return "type";
    return std::nullopt;
}

bool check_compatibility(const model::ServicePortSpec& required, const model::ServicePortSpec& provided) {
    return !incompatibility(required, provided);
}

ChannelOpener Transport::opener(const std::string& address, const model::ServicePortSpec& required) {
    return [this, address, required](InboundFn inbound) { return open(address, required, std::move(inbound)); };
}

namespace {

class InProcChannel final : public Channel, public Replier, public std::enable_shared_from_this<InProcChannel> {
public:
    InProcChannel(const InProcessTransport& transport, std::weak_ptr<Provider> provider, ConnectionId id, InboundFn inbound)
        : transport_(transport), provider_(std::move(provider)), id_(id), inbound_(std::move(inbound)) {}

    Admission post(Message msg) override {
        if (closed_) return Admission::Closed;
        auto p = provider_.lock();
        if (!p) return Admission::Closed;
        try {
            msg = transport_.carry(std::move(msg));
        } catch (const Error&) {
            return Admission::Malformed;
        }
        return p->deliver(id_, std::move(msg));
    }

    void close() override {
        if (closed_.exchange(true)) return;
        if (auto p = provider_.lock()) p->detach(id_);
    }

    bool reply(Message msg) override {
        if (closed_) return false;
        inbound_(transport_.carry(std::move(msg)));
        return true;
    }

private:
    const InProcessTransport& transport_;
    std::weak_ptr<Provider> provider_;
    ConnectionId id_;
    InboundFn inbound_;
    std::atomic<bool> closed_{false};
};

}  // namespace

InProcessTransport::InProcessTransport(std::shared_ptr<const TypeTable> types, bool wire_roundtrip)
    : types_(std::move(types)), roundtrip_(wire_roundtrip && types_) {}

void InProcessTransport::bind(const std::string& address, std::shared_ptr<Provider> provider) {
    std::lock_guard lk(mu_);
    auto& slot = providers_[address];
    if (!slot.expired()) throw Error(ErrorCode::InvalidArgument, "address already bound: " + address);
    slot = provider;
}

void InProcessTransport::unbind(const std::string& address) {
    std::lock_guard lk(mu_);
    providers_.erase(address);
}

std::shared_ptr<Channel> InProcessTransport::open(const std::string& address, const model::ServicePortSpec& required,
                                                  InboundFn inbound) {
    std::lock_guard lk(mu_);
    std::shared_ptr<Provider> provider;
    auto it = providers_.find(address);
    if (it != providers_.end()) provider = it->second.lock();
    if (!provider) throw Error(ErrorCode::Incompatible, "no provider at " + address);
    if (auto why = incompatibility(required, provider->spec())) throw Error(ErrorCode::Incompatible, *why);
    ConnectionId id = next_id_++;
    auto channel = std::make_shared<InProcChannel>(*this, provider, id, std::move(inbound));
    provider->attach(id, channel);
    return channel;
}

Message InProcessTransport::carry(Message msg) const {
    if (!roundtrip_) return msg;
    FrameDecoder decoder(*types_);
    decoder.feed(encode_frame(msg, *types_));
    auto out = decoder.next();
    if (!out || decoder.buffered() != 0) throw Error(ErrorCode::ProtocolError, "frame round trip failed");
    return std::move(*out);
}

}  // namespace smartmars::patterns
