#include "kforge/device_pool.hpp"

#include "kforge/core.hpp"

#include <algorithm>
#include <set>

namespace kforge {

DevicePool::DevicePool(std::vector<std::string> devices) : devices_(std::move(devices)) {
    if (devices_.empty()) throw ConfigError({"device pool needs at least one device"});
    std::set<std::string> unique(devices_.begin(), devices_.end());
    if (unique.size() != devices_.size()) throw ConfigError({"duplicate device id in pool"});
}

DevicePool::Lease::Lease(Lease&& other) noexcept
    : pool_(std::exchange(other.pool_, nullptr)),
      device_(std::move(other.device_)),
      holder_(std::move(other.holder_)) {}

DevicePool::Lease& DevicePool::Lease::operator=(Lease&& other) noexcept {
    if (this != &other) {
        release();
        pool_ = std::exchange(other.pool_, nullptr);
        device_ = std::move(other.device_);
        holder_ = std::move(other.holder_);
    }
    return *this;
}

DevicePool::Lease::~Lease() {
    try {
        release();
    } catch (const std::logic_error&) {
        // already released through the pool by its holder
    }
}

void DevicePool::Lease::release() {
    if (pool_) {
        auto* pool = std::exchange(pool_, nullptr);
        pool->release(device_, holder_);
    }
}

DevicePool::Lease DevicePool::acquire(const std::string& holder) { return Lease(this, lease(holder), holder); }

std::string DevicePool::lease(const std::string& holder) {
    std::unique_lock lock(mu_);
    const auto ticket = next_ticket_++;
    cv_.wait(lock, [&] { return ticket == serving_ && leases_.size() < devices_.size(); });
    ++serving_;
    const auto it = std::find_if(devices_.begin(), devices_.end(),
                                 [&](const std::string& d) { return !leases_.contains(d); });
    leases_.emplace(*it, holder);
    high_water_ = std::max(high_water_, leases_.size());
    const auto device = *it;
    lock.unlock();
    // the next ticket may be able to proceed as well
    cv_.notify_all();
    return device;
}

void DevicePool::release(const std::string& device, const std::string& holder) {
    {
        std::lock_guard lock(mu_);
        auto it = leases_.find(device);
        if (it == leases_.end() || it->second != holder)
            throw std::logic_error("device '" + device + "' is not held by '" + holder + "'");
        leases_.erase(it);
    }
    cv_.notify_all();
}

std::size_t DevicePool::outstanding() const {
    std::lock_guard lock(mu_);
    return leases_.size();
}

std::size_t DevicePool::high_water() const {
    std::lock_guard lock(mu_);
    return high_water_;
}

std::optional<std::string> DevicePool::holder_of(const std::string& device) const {
    std::lock_guard lock(mu_);
    if (auto it = leases_.find(device); it != leases_.end()) return it->second;
    return std::nullopt;
}

}  // namespace kforge
