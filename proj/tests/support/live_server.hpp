#pragma once

#include <httplib.h>

#include <memory>
#include <thread>

#include "latent/service.hpp"

namespace fixture {

// Serves a SuggestService on a free loopback port for the object's lifetime.
class LiveServer {
 public:
  explicit LiveServer(const latent::SuggestService& service, latent::ServeOptions opts = {}) {
    opts.host = "127.0.0.1";
    opts.port = 0;
    opts.workers = 2;
    front_ = std::make_unique<latent::HttpFrontend>(service, opts);
    port_ = front_->Bind();
    thread_ = std::thread([this] { front_->Run(); });
  }
  ~LiveServer() {
    front_->Stop();
    thread_.join();
  }
  LiveServer(const LiveServer&) = delete;
  LiveServer& operator=(const LiveServer&) = delete;

  httplib::Client Client() const { return httplib::Client("127.0.0.1", port_); }

 private:
  std::unique_ptr<latent::HttpFrontend> front_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace fixture
