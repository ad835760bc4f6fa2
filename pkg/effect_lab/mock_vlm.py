# -*- coding: utf-8 -*-
"""
A scripted stand-in for the QScore endpoint, used by the tests and for
offline runs::

    with MockVlmServer(replies=[(500, 'busy'), (200, '7.5')]) as server:
        client = VlmClient(VlmConfig(endpoint=server.url))

Replies are consumed in order; once exhausted ``default`` is returned.
``delay`` holds every reply back by that many seconds.
"""
import json
import logging
import threading
import time
from collections import deque
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

logger = logging.getLogger(__name__)


class _Handler(BaseHTTPRequestHandler):

    def do_POST(self):
        server = self.server
        length = int(self.headers.get('Content-Length') or 0)
        body = self.rfile.read(length)
        try:
            payload = json.loads(body.decode('utf-8'))
        except ValueError:
            payload = None
        with server.lock:
            server.requests.append({
                'path': self.path,
                'authorization': self.headers.get('Authorization'),
                'payload': payload,
            })
            if server.token and self.headers.get('Authorization') != 'Bearer ' + server.token:
                status, text = 401, 'unauthorized'
            else:
                status, text = server.replies.popleft() if server.replies else server.default
        if server.delay:
            time.sleep(server.delay)
        data = json.dumps({'text': text}).encode('utf-8')
        try:
            self.send_response(status)
            self.send_header('Content-Type', 'application/json')
            self.send_header('Content-Length', str(len(data)))
            self.end_headers()
            self.wfile.write(data)
        except (BrokenPipeError, ConnectionResetError):
            # the client gave up waiting
            logger.debug('mock vlm: client went away')

    def log_message(self, format, *args):
        logger.debug('mock vlm: ' + format, *args)


class MockVlmServer(object):

    def __init__(self, replies=(), default=(200, '9'), token=None, delay=0.0,
                 host='127.0.0.1', port=0):
        self.httpd = ThreadingHTTPServer((host, port), _Handler)
        self.httpd.daemon_threads = True
        self.httpd.replies = deque(replies)
        self.httpd.default = default
        self.httpd.token = token
        self.httpd.delay = delay
        self.httpd.requests = []
        self.httpd.lock = threading.Lock()
        self.thread = None

    @property
    def url(self):
        host, port = self.httpd.server_address[:2]
        return 'http://{0}:{1}/v1/score'.format(host, port)

    @property
    def requests(self):
        return self.httpd.requests

    def start(self):
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self.thread.start()
        return self

    def stop(self):
        self.httpd.shutdown()
        self.httpd.server_close()
        if self.thread is not None:
            self.thread.join()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc_info):
        self.stop()
