#pragma once

#include <condition_variable>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace kforge {

/**
 * Exclusive leasing of computational units: one evaluation per device at a time.
 *
 * Waiters are served strictly in arrival order. Releasing a device you do not
 * hold is a logic error.
 */
class DevicePool {
public:
    explicit DevicePool(std::vector<std::string> devices);
    DevicePool(const DevicePool&) = delete;
    DevicePool& operator=(const DevicePool&) = delete;

    /// RAII lease; releases on destruction unless released explicitly.
    class Lease {
    public:
        Lease() = default;
        Lease(Lease&& other) noexcept;
        Lease& operator=(Lease&& other) noexcept;
        ~Lease();

        const std::string& device() const noexcept { return device_; }
        const std::string& holder() const noexcept { return holder_; }
        explicit operator bool() const noexcept { return pool_ != nullptr; }
        void release();

    private:
        friend class DevicePool;
        Lease(DevicePool* pool, std::string device, std::string holder)
            : pool_(pool), device_(std::move(device)), holder_(std::move(holder)) {}

        DevicePool* pool_ = nullptr;
        std::string device_;
        std::string holder_;
    };

    /// Blocks until a device is free and this caller is first in line.
    Lease acquire(const std::string& holder);

    /// Non-RAII form of acquire.
    std::string lease(const std::string& holder);
    /// Throws std::logic_error if `holder` does not currently hold `device`.
    void release(const std::string& device, const std::string& holder);

    std::size_t size() const noexcept { return devices_.size(); }
    std::size_t outstanding() const;
    /// Largest number of simultaneous leases observed.
    std::size_t high_water() const;
    std::optional<std::string> holder_of(const std::string& device) const;
    const std::vector<std::string>& devices() const noexcept { return devices_; }

private:
    std::vector<std::string> devices_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::map<std::string, std::string> leases_;  // device -> holder
    std::uint64_t next_ticket_ = 0;
    std::uint64_t serving_ = 0;
    std::size_t high_water_ = 0;
};

}  // namespace kforge
