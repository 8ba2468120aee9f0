#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "giglite/realtime/service.h"

namespace giglite {

/// Sends one request frame to a partition and returns the response frame.
class Transport {
  public:
    virtual ~Transport() = default;
    virtual uint32_t partitions() const = 0;
    virtual std::string exchange(uint32_t partition, const std::string& request_frame) = 0;
};

/// Calls services directly; used by tests and single-process runs.
class InProcessTransport final : public Transport {
  public:
    explicit InProcessTransport(std::vector<const NeighborService*> services) : services_(std::move(services)) {}
    uint32_t partitions() const override { return static_cast<uint32_t>(services_.size()); }
    std::string exchange(uint32_t partition, const std::string& request_frame) override;

  private:
    std::vector<const NeighborService*> services_;
};

struct Endpoint {
    std::string host = "127.0.0.1";
    uint16_t port = 0;
};

std::string to_string(const Endpoint& e);
/// "host:port"; throws ConfigError.
Endpoint parse_endpoint(const std::string& text);

/// Serves one partition over TCP, one thread per connection. A frame that declares an
/// oversized payload gets a LENGTH_OVERFLOW reply and the connection is closed; any
/// other bad frame gets an error reply and the connection stays open.
class TcpServer {
  public:
    /// Port 0 binds an ephemeral port. Throws TransportError.
    TcpServer(const NeighborService& service, const std::string& host = "127.0.0.1", uint16_t port = 0);
    ~TcpServer();
    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    uint16_t port() const { return port_; }
    void stop();

  private:
    void accept_loop();
    void serve_connection(int fd);

    const NeighborService& service_;
    int listen_fd_ = -1;
    uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::thread acceptor_;
    std::mutex mu_;
    std::vector<int> connections_;
    std::vector<std::thread> workers_;
};

/// One persistent connection per partition, reconnecting on failure. After `retries`
/// failed attempts the call throws TransportError naming the partition.
class TcpTransport final : public Transport {
  public:
    explicit TcpTransport(std::vector<Endpoint> endpoints, uint32_t retries = 3, uint32_t backoff_ms = 20);
    ~TcpTransport() override;
    uint32_t partitions() const override { return static_cast<uint32_t>(endpoints_.size()); }
    std::string exchange(uint32_t partition, const std::string& request_frame) override;

  private:
    std::vector<Endpoint> endpoints_;
    std::vector<int> fds_;
    uint32_t retries_;
    uint32_t backoff_ms_;
};

/// Raw socket helpers, exposed for protocol tests.
int connect_to(const Endpoint& endpoint);
bool write_all(int fd, std::string_view bytes);
/// Reads one frame (header and payload); returns false on EOF or error.
bool read_frame(int fd, std::string& out);

}  // namespace giglite
