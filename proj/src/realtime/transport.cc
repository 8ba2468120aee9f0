#include "giglite/realtime/transport.h"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include "giglite/error.h"
#include "giglite/text_format.h"

namespace giglite {

std::string InProcessTransport::exchange(uint32_t partition, const std::string& request_frame) {
    if (partition >= services_.size() || services_[partition] == nullptr) {
        throw TransportError("partition " + std::to_string(partition) + " has no in-process service");
    }
    return services_[partition]->handle_frame(request_frame);
}

std::string to_string(const Endpoint& e) { return e.host + ":" + std::to_string(e.port); }

Endpoint parse_endpoint(const std::string& text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0) throw ConfigError("endpoint '" + text + "' is not host:port");
    try {
        const uint64_t port = parse_u64(text.substr(colon + 1));
        if (port > 65535) throw ConfigError("endpoint port out of range in '" + text + "'");
        return {text.substr(0, colon), static_cast<uint16_t>(port)};
    } catch (const ParseError&) {
        throw ConfigError("endpoint '" + text + "' has a bad port");
    }
}

bool write_all(int fd, std::string_view bytes) {
    while (!bytes.empty()) {
        const ssize_t n = ::send(fd, bytes.data(), bytes.size(), MSG_NOSIGNAL);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) return false;
        bytes.remove_prefix(static_cast<size_t>(n));
    }
    return true;
}

namespace {

bool read_exact(int fd, char* buf, size_t n) {
    while (n > 0) {
        const ssize_t got = ::recv(fd, buf, n, 0);
        if (got < 0 && errno == EINTR) continue;
        if (got <= 0) return false;
        buf += got;
        n -= static_cast<size_t>(got);
    }
    return true;
}

uint32_t declared_length(const char* header) {
    uint32_t n = 0;
    for (int i = 0; i < 4; ++i) n = (n << 8) | static_cast<unsigned char>(header[i]);
    return n;
}

}  // namespace

bool read_frame(int fd, std::string& out) {
    char header[5];
    if (!read_exact(fd, header, 5)) return false;
    const uint32_t n = declared_length(header);
    if (n > kMaxPayload) return false;
    out.assign(header, 5);
    out.resize(5 + static_cast<size_t>(n));
    return read_exact(fd, out.data() + 5, n);
}

int connect_to(const Endpoint& e) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(e.host.c_str(), std::to_string(e.port).c_str(), &hints, &res) != 0) return -1;
    int fd = -1;
    for (addrinfo* a = res; a; a = a->ai_next) {
        fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd >= 0) {
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    }
    return fd;
}

TcpServer::TcpServer(const NeighborService& service, const std::string& host, uint16_t port) : service_(service) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw TransportError(std::string("socket: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(listen_fd_);
        throw TransportError("cannot bind to non-IPv4 host '" + host + "'");
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 64) != 0) {
        const std::string reason = std::strerror(errno);
        ::close(listen_fd_);
        throw TransportError("bind " + host + ":" + std::to_string(port) + ": " + reason);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    acceptor_ = std::thread([this] { accept_loop(); });
}

TcpServer::~TcpServer() { stop(); }

void TcpServer::stop() {
    if (stopping_.exchange(true)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    if (acceptor_.joinable()) acceptor_.join();
    std::vector<std::thread> workers;
    {
        std::lock_guard lock(mu_);
        for (int fd : connections_) ::shutdown(fd, SHUT_RDWR);
        workers = std::move(workers_);
    }
    for (auto& t : workers) t.join();
}

void TcpServer::accept_loop() {
    while (!stopping_) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (errno == EINTR) continue;
            return;
        }
        std::lock_guard lock(mu_);
        if (stopping_) {
            ::close(fd);
            return;
        }
        connections_.push_back(fd);
        workers_.emplace_back([this, fd] { serve_connection(fd); });
    }
}

void TcpServer::serve_connection(int fd) {
    std::string request;
    char header[5];
    while (!stopping_) {
        if (!read_exact(fd, header, 5)) break;
        const uint32_t n = declared_length(header);
        if (n > kMaxPayload) {
            // The stream cannot be resynchronized after an impossible length.
            write_all(fd, service_.handle_frame(std::string_view(header, 5)));
            break;
        }
        request.assign(header, 5);
        request.resize(5 + static_cast<size_t>(n));
        if (!read_exact(fd, request.data() + 5, n)) break;
        if (!write_all(fd, service_.handle_frame(request))) break;
    }
    std::lock_guard lock(mu_);
    std::erase(connections_, fd);
    ::close(fd);
}

TcpTransport::TcpTransport(std::vector<Endpoint> endpoints, uint32_t retries, uint32_t backoff_ms)
    : endpoints_(std::move(endpoints)), fds_(endpoints_.size(), -1), retries_(std::max<uint32_t>(1, retries)),
      backoff_ms_(backoff_ms) {}

TcpTransport::~TcpTransport() {
    for (int fd : fds_) {
        if (fd >= 0) ::close(fd);
    }
}

std::string TcpTransport::exchange(uint32_t partition, const std::string& request_frame) {
    if (partition >= endpoints_.size()) {
        throw TransportError("partition " + std::to_string(partition) + " has no endpoint");
    }
    int& fd = fds_[partition];
    std::string response;
    for (uint32_t attempt = 0; attempt < retries_; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms_ * attempt));
        if (fd < 0) fd = connect_to(endpoints_[partition]);
        if (fd < 0) continue;
        if (write_all(fd, request_frame) && read_frame(fd, response)) return response;
        ::close(fd);
        fd = -1;
    }
    throw TransportError("partition " + std::to_string(partition) + " at " + to_string(endpoints_[partition]) +
                         " unreachable after " + std::to_string(retries_) + " attempts");
}

}  // namespace giglite
