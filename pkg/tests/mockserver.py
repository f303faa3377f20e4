"""Scripted JSON-over-HTTP server for exercising the remote clients."""
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from infill_attack.models import ModelEndpoint


class Server:
    """Routes ``/role`` POSTs to ``handlers[role](payload) -> (status, body)``."""

    def __init__(self):
        self.handlers = {}
        self.hits = []
        outer = self

        class H(BaseHTTPRequestHandler):
            def do_POST(self):
                role = self.path.strip("/")
                payload = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
                outer.hits.append(role)
                status, body = outer.handlers[role](payload)
                raw = body if isinstance(body, bytes) else json.dumps(body).encode()
                try:
                    self.send_response(status)
                    self.send_header("Content-Type", "application/json")
                    self.send_header("Content-Length", str(len(raw)))
                    self.end_headers()
                    self.wfile.write(raw)
                except (BrokenPipeError, ConnectionResetError):
                    pass  # client already gave up (timeout tests)

            def log_message(self, *args):
                pass

        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), H)
        self.thread = threading.Thread(target=self.httpd.serve_forever, args=(0.02,), daemon=True)

    @property
    def url(self):
        return f"http://127.0.0.1:{self.httpd.server_address[1]}"

    def endpoint(self, **kw):
        return ModelEndpoint(self.url, **{"timeout": 2.0, "retries": 0, "backoff": 0.01, **kw})

    def start(self):
        self.thread.start()
        return self

    def stop(self):
        self.httpd.shutdown()
        self.httpd.server_close()
