#include "kforge/device_pool.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <set>
#include <stdexcept>
#include <thread>

using namespace kforge;

TEST(DevicePool, LeaseAndRelease) {
    DevicePool pool({"0", "1"});
    auto a = pool.acquire("a");
    auto b = pool.acquire("b");
    EXPECT_NE(a.device(), b.device());
    EXPECT_EQ(pool.outstanding(), 2u);
    EXPECT_EQ(pool.holder_of(a.device()), "a");
    a.release();
    EXPECT_FALSE(a);
    EXPECT_EQ(pool.outstanding(), 1u);
    a.release();  // idempotent
    EXPECT_EQ(pool.outstanding(), 1u);
}

TEST(DevicePool, RaiiReleasesOnScopeExit) {
    DevicePool pool({"0"});
    { auto l = pool.acquire("x"); }
    EXPECT_EQ(pool.outstanding(), 0u);
    auto l = pool.acquire("y");
    auto moved = std::move(l);
    EXPECT_FALSE(l);
    EXPECT_TRUE(moved);
    EXPECT_EQ(pool.outstanding(), 1u);
}

TEST(DevicePool, ReleasingForeignLeaseIsLogicError) {
    DevicePool pool({"0"});
    const auto d = pool.lease("owner");
    EXPECT_THROW(pool.release(d, "intruder"), std::logic_error);
    EXPECT_THROW(pool.release("nope", "owner"), std::logic_error);
    pool.release(d, "owner");
    EXPECT_THROW(pool.release(d, "owner"), std::logic_error);
}

TEST(DevicePool, EmptyOrDuplicateDevicesRejected) {
    EXPECT_ANY_THROW(DevicePool({}));
    EXPECT_ANY_THROW(DevicePool({"0", "0"}));
}

TEST(DevicePool, NeverExceedsCapacityUnderContention) {
    DevicePool pool({"0", "1", "2", "3"});
    std::atomic<int> active{0}, peak{0};
    std::vector<std::thread> threads;
    std::mutex seen_mu;
    std::set<std::string> busy;
    bool double_lease = false;
    for (int i = 0; i < 64; ++i) {
        threads.emplace_back([&, i] {
            auto lease = pool.acquire("w" + std::to_string(i));
            {
                std::lock_guard lock(seen_mu);
                if (!busy.insert(lease.device()).second) double_lease = true;
            }
            const int now = ++active;
            int prev = peak.load();
            while (now > prev && !peak.compare_exchange_weak(prev, now)) {
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(2));
            --active;
            {
                std::lock_guard lock(seen_mu);
                busy.erase(lease.device());
            }
        });
    }
    for (auto& t : threads) t.join();
    EXPECT_FALSE(double_lease);
    EXPECT_LE(peak.load(), 4);
    EXPECT_LE(pool.high_water(), 4u);
    EXPECT_EQ(pool.outstanding(), 0u);
}

TEST(DevicePool, WaitersServedInArrivalOrder) {
    DevicePool pool({"0"});
    auto held = pool.acquire("first");
    std::mutex mu;
    std::vector<int> order;
    std::vector<std::thread> threads;
    for (int i = 0; i < 5; ++i) {
        threads.emplace_back([&, i] {
            auto l = pool.acquire("w" + std::to_string(i));
            std::lock_guard lock(mu);
            order.push_back(i);
        });
        // let thread i queue before the next one arrives
        std::this_thread::sleep_for(std::chrono::milliseconds(30));
    }
    held.release();
    for (auto& t : threads) t.join();
    EXPECT_EQ(order, (std::vector<int>{0, 1, 2, 3, 4}));
}
