#include "dexter/external_classifier.hpp"

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <memory>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "dexter/errors.hpp"

namespace dexter {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

// A peer that dies mid-write has to surface as ProtocolError, not as a
// SIGPIPE that kills this process.
void ignore_sigpipe() {
    static const bool done = [] {
        ::signal(SIGPIPE, SIG_IGN);
        return true;
    }();
    (void)done;
}

class Channel {
public:
    virtual ~Channel() = default;
    virtual int in_fd() const = 0;
    virtual int out_fd() const = 0;
    virtual void finish_writing() = 0;
};

class SubprocessChannel : public Channel {
public:
    explicit SubprocessChannel(const std::vector<std::string>& command) {
        int to_child[2];
        int from_child[2];
        if (::pipe(to_child) != 0) {
            throw Error(ErrorKind::IoError, std::string("pipe: ") + std::strerror(errno));
        }
        if (::pipe(from_child) != 0) {
            ::close(to_child[0]);
            ::close(to_child[1]);
            throw Error(ErrorKind::IoError, std::string("pipe: ") + std::strerror(errno));
        }
        pid_ = ::fork();
        if (pid_ < 0) {
            ::close(to_child[0]);
            ::close(to_child[1]);
            ::close(from_child[0]);
            ::close(from_child[1]);
            throw Error(ErrorKind::IoError, std::string("fork: ") + std::strerror(errno));
        }
        if (pid_ == 0) {
            ::dup2(to_child[0], STDIN_FILENO);
            ::dup2(from_child[1], STDOUT_FILENO);
            ::close(to_child[0]);
            ::close(to_child[1]);
            ::close(from_child[0]);
            ::close(from_child[1]);
            std::vector<char*> argv;
            argv.reserve(command.size() + 1);
            for (const auto& arg : command) {
                argv.push_back(const_cast<char*>(arg.c_str()));
            }
            argv.push_back(nullptr);
            ::execvp(argv[0], argv.data());
            ::_exit(127);
        }
        ::close(to_child[0]);
        ::close(from_child[1]);
        out_fd_ = to_child[1];
        in_fd_ = from_child[0];
    }

    ~SubprocessChannel() override {
        finish_writing();
        if (in_fd_ >= 0) ::close(in_fd_);
        if (pid_ > 0) {
            int status = 0;
            if (::waitpid(pid_, &status, WNOHANG) == 0) {
                // Still running (for example, hung past a timeout): don't
                // block teardown on it.
                ::kill(pid_, SIGKILL);
                ::waitpid(pid_, &status, 0);
            }
        }
    }

    int in_fd() const override { return in_fd_; }
    int out_fd() const override { return out_fd_; }

    void finish_writing() override {
        if (out_fd_ >= 0) {
            ::close(out_fd_);
            out_fd_ = -1;
        }
    }

private:
    pid_t pid_ = -1;
    int in_fd_ = -1;
    int out_fd_ = -1;
};

class TcpChannel : public Channel {
public:
    TcpChannel(const std::string& host, uint16_t port, double timeout_s) {
        addrinfo hints{};
        hints.ai_family = AF_UNSPEC;
        hints.ai_socktype = SOCK_STREAM;
        addrinfo* results = nullptr;
        int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &results);
        if (rc != 0) {
            throw Error(ErrorKind::TransportError,
                        "cannot resolve " + host + ": " + ::gai_strerror(rc));
        }
        std::string last_error = "no addresses";
        for (addrinfo* ai = results; ai != nullptr; ai = ai->ai_next) {
            int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
            if (fd < 0) {
                last_error = std::strerror(errno);
                continue;
            }
            ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL, 0) | O_NONBLOCK);
            if (connect_with_deadline(fd, ai, timeout_s, last_error)) {
                fd_ = fd;
                break;
            }
            ::close(fd);
        }
        ::freeaddrinfo(results);
        if (fd_ < 0) {
            throw Error(ErrorKind::TransportError,
                        "cannot connect to " + host + ":" + std::to_string(port) + ": " +
                            last_error);
        }
    }

    ~TcpChannel() override {
        if (fd_ >= 0) ::close(fd_);
    }

    int in_fd() const override { return fd_; }
    int out_fd() const override { return fd_; }

    void finish_writing() override {
        if (fd_ >= 0) ::shutdown(fd_, SHUT_WR);
    }

private:
    static bool connect_with_deadline(int fd, const addrinfo* ai, double timeout_s,
                                      std::string& last_error) {
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
            return true;
        }
        if (errno != EINPROGRESS) {
            last_error = std::strerror(errno);
            return false;
        }
        pollfd pfd{fd, POLLOUT, 0};
        int ms = static_cast<int>(timeout_s * 1000.0);
        int rc = ::poll(&pfd, 1, ms > 0 ? ms : 1);
        if (rc <= 0) {
            last_error = rc == 0 ? "connect timed out" : std::strerror(errno);
            return false;
        }
        int err = 0;
        socklen_t len = sizeof(err);
        if (::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len) != 0 || err != 0) {
            last_error = std::strerror(err != 0 ? err : errno);
            return false;
        }
        return true;
    }

    int fd_ = -1;
};

// Writes `payload` and gathers response lines until the blank-line batch
// terminator, all under one deadline. `carry` holds bytes that arrived past
// a previous terminator so nothing is lost between batches.
std::vector<std::string> exchange_batch(Channel& channel, const std::string& payload,
                                        Clock::time_point deadline, std::string& carry) {
    std::vector<std::string> lines;
    bool terminated = false;

    auto drain_lines = [&] {
        size_t nl;
        while (!terminated && (nl = carry.find('\n')) != std::string::npos) {
            std::string line = carry.substr(0, nl);
            carry.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) {
                terminated = true;
            } else {
                lines.push_back(std::move(line));
            }
        }
    };

    drain_lines();
    size_t sent = 0;
    while (!terminated) {
        auto now = Clock::now();
        if (now >= deadline) {
            throw Error(ErrorKind::Timeout, "no batch terminator within the timeout");
        }
        auto remaining =
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
        if (remaining > 250) remaining = 250;

        pollfd fds[2];
        nfds_t nfds = 0;
        fds[nfds].fd = channel.in_fd();
        fds[nfds].events = POLLIN;
        fds[nfds].revents = 0;
        ++nfds;
        if (sent < payload.size()) {
            fds[nfds].fd = channel.out_fd();
            fds[nfds].events = POLLOUT;
            fds[nfds].revents = 0;
            ++nfds;
        }

        int rc = ::poll(fds, nfds, static_cast<int>(remaining));
        if (rc < 0) {
            if (errno == EINTR) continue;
            throw Error(ErrorKind::IoError, std::string("poll: ") + std::strerror(errno));
        }
        if (rc == 0) continue;

        if (nfds == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP)) != 0) {
            ssize_t w = ::write(channel.out_fd(), payload.data() + sent, payload.size() - sent);
            if (w < 0) {
                if (errno == EPIPE || errno == ECONNRESET) {
                    throw Error(ErrorKind::ProtocolError,
                                "peer closed the stream while the batch was being sent");
                }
                if (errno != EINTR && errno != EAGAIN) {
                    throw Error(ErrorKind::IoError, std::string("write: ") + std::strerror(errno));
                }
            } else {
                sent += static_cast<size_t>(w);
            }
        }

        if ((fds[0].revents & (POLLIN | POLLHUP | POLLERR)) != 0) {
            char buf[65536];
            ssize_t r = ::read(channel.in_fd(), buf, sizeof(buf));
            if (r < 0) {
                if (errno != EINTR && errno != EAGAIN) {
                    throw Error(ErrorKind::IoError, std::string("read: ") + std::strerror(errno));
                }
            } else if (r == 0) {
                throw Error(ErrorKind::ProtocolError,
                            "peer closed the stream before terminating the batch");
            } else {
                carry.append(buf, static_cast<size_t>(r));
                drain_lines();
            }
        }
    }
    return lines;
}

Label parse_label(const std::string& name) {
    if (name == "benign") return Label::Benign;
    if (name == "malicious") return Label::Malicious;
    throw Error(ErrorKind::ProtocolError, "unrecognized label '" + name + "'");
}

}  // namespace

std::vector<ClassifyResponse> classify_external(const std::vector<ClassifyRequest>& requests,
                                                const ExternalEndpoint& endpoint) {
    bool has_command = !endpoint.command.empty();
    bool has_host = !endpoint.host.empty();
    if (has_command == has_host) {
        throw Error(ErrorKind::ConfigError,
                    "configure exactly one of a command or a host/port for the external "
                    "classifier");
    }
    if (endpoint.batch_size == 0) {
        throw Error(ErrorKind::ConfigError, "external classifier batch_size must be positive");
    }
    if (requests.empty()) return {};

    std::unordered_set<std::string> seen_ids;
    for (const auto& request : requests) {
        if (!seen_ids.insert(request.id).second) {
            throw Error(ErrorKind::MalformedRecord, "duplicate request id '" + request.id + "'");
        }
    }

    ignore_sigpipe();
    std::unique_ptr<Channel> channel;
    if (has_command) {
        channel = std::make_unique<SubprocessChannel>(endpoint.command);
    } else {
        channel = std::make_unique<TcpChannel>(endpoint.host, endpoint.port, endpoint.timeout_s);
    }

    std::vector<ClassifyResponse> out;
    out.reserve(requests.size());
    std::string carry;
    for (size_t begin = 0; begin < requests.size(); begin += endpoint.batch_size) {
        size_t end = std::min(requests.size(), begin + endpoint.batch_size);

        std::string payload;
        std::unordered_map<std::string, size_t> position;
        for (size_t i = begin; i < end; ++i) {
            json line;
            line["id"] = requests[i].id;
            line["text"] = requests[i].text;
            payload += line.dump();
            payload += '\n';
            position[requests[i].id] = i - begin;
        }
        payload += '\n';

        auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                           std::chrono::duration<double>(endpoint.timeout_s));
        auto lines = exchange_batch(*channel, payload, deadline, carry);

        std::vector<ClassifyResponse> batch(end - begin);
        std::unordered_set<std::string> answered;
        for (const auto& line : lines) {
            json doc = json::parse(line, nullptr, false);
            if (doc.is_discarded() || !doc.is_object()) {
                throw Error(ErrorKind::ProtocolError, "response line is not a JSON object");
            }
            if (!doc.contains("id") || !doc["id"].is_string()) {
                throw Error(ErrorKind::ProtocolError, "response line has no string id");
            }
            std::string id = doc["id"].get<std::string>();
            auto at = position.find(id);
            if (at == position.end()) {
                throw Error(ErrorKind::ProtocolError, "response for unknown id '" + id + "'");
            }
            if (!answered.insert(id).second) {
                throw Error(ErrorKind::ProtocolError, "duplicate response for id '" + id + "'");
            }
            if (!doc.contains("label") || !doc["label"].is_string()) {
                throw Error(ErrorKind::ProtocolError, "response line has no string label");
            }
            if (!doc.contains("score") || !doc["score"].is_number()) {
                throw Error(ErrorKind::ProtocolError, "response line has no numeric score");
            }
            ClassifyResponse& slot = batch[at->second];
            slot.id = std::move(id);
            slot.label = parse_label(doc["label"].get<std::string>());
            slot.score = doc["score"].get<double>();
        }
        if (answered.size() != end - begin) {
            throw Error(ErrorKind::ProtocolError,
                        "batch terminated with " + std::to_string(answered.size()) + " of " +
                            std::to_string(end - begin) + " responses");
        }
        for (auto& response : batch) {
            out.push_back(std::move(response));
        }
    }
    channel->finish_writing();
    return out;
}

}  // namespace dexter
