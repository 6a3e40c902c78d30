// Copyright 2026-present the lmforge project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string_view>

namespace lmforge {

/// Minimal built-in chat page served at `/` when no UI bundle directory is
/// configured. It speaks the same POST /api/generate SSE protocol as the
/// full client.
inline constexpr std::string_view kBootstrapHtml = R"HTML(<!doctype html>
<html lang="en">
<head>
<meta charset="utf-8">
<meta name="viewport" content="width=device-width, initial-scale=1">
<title>lmforge chat</title>
<style>
body { font-family: system-ui, sans-serif; margin: 0; display: flex; height: 100vh; }
#side { width: 15rem; padding: 1rem; border-right: 1px solid #ddd; font-size: 0.9rem; }
#side label { display: block; margin-top: 0.6rem; }
#side input, #side textarea { width: 100%; box-sizing: border-box; }
#main { flex: 1; display: flex; flex-direction: column; }
#log { flex: 1; overflow-y: auto; padding: 1rem; }
.msg { margin: 0.4rem 0; padding: 0.5rem 0.7rem; border-radius: 6px; white-space: pre-wrap; }
.user { background: #e8f0fe; }
.assistant { background: #f1f3f4; }
#err { color: #b00020; padding: 0 1rem; min-height: 1.2rem; }
form { display: flex; padding: 1rem; gap: 0.5rem; }
#prompt { flex: 1; }
</style>
</head>
<body>
<div id="side">
  <strong>Parameters</strong>
  <label>temperature <input id="temperature" type="number" min="0" step="0.1" value="0.7"></label>
  <label>top_p <input id="top_p" type="number" min="0.01" max="1" step="0.05" value="0.9"></label>
  <label>max_length <input id="max_length" type="number" min="1" value="512"></label>
  <label>memory_k <input id="memory_k" type="number" min="0" value="10"></label>
  <label>system_prompt <textarea id="system_prompt" rows="4"></textarea></label>
  <label>API token <input id="token" type="password"></label>
  <button id="reset" type="button">New conversation</button>
</div>
<div id="main">
  <div id="log"></div>
  <div id="err"></div>
  <form id="form"><input id="prompt" autocomplete="off" placeholder="Message"><button id="send">Send</button></form>
</div>
<script>
const $ = (id) => document.getElementById(id);
let conversationId = sessionStorage.getItem("conversation_id");
let busy = false;

function bubble(role, text) {
  const d = document.createElement("div");
  d.className = "msg " + role;
  d.textContent = text;
  $("log").appendChild(d);
  $("log").scrollTop = $("log").scrollHeight;
  return d;
}

function body(prompt) {
  const b = {
    prompt,
    temperature: Number($("temperature").value),
    top_p: Number($("top_p").value),
    max_length: Number($("max_length").value),
    memory_k: Number($("memory_k").value),
  };
  const sys = $("system_prompt").value.trim();
  if (sys) b.system_prompt = sys;
  if (conversationId) b.conversation_id = conversationId;
  return b;
}

async function send(prompt) {
  busy = true;
  $("send").disabled = true;
  $("err").textContent = "";
  const headers = { "Content-Type": "application/json" };
  if ($("token").value) headers["Authorization"] = "Bearer " + $("token").value;
  const u = bubble("user", prompt);
  const a = bubble("assistant", "");
  try {
    const res = await fetch("/api/generate", { method: "POST", headers, body: JSON.stringify(body(prompt)) });
    if (!res.ok) {
      const e = await res.json().catch(() => ({}));
      throw new Error(res.status + " " + (e.error || res.statusText));
    }
    const reader = res.body.getReader();
    const dec = new TextDecoder();
    let buf = "";
    for (;;) {
      const { value, done } = await reader.read();
      if (done) break;
      buf += dec.decode(value, { stream: true });
      let cut;
      while ((cut = buf.indexOf("\n\n")) >= 0) {
        const frame = buf.slice(0, cut);
        buf = buf.slice(cut + 2);
        for (const line of frame.split("\n")) {
          if (!line.startsWith("data: ")) continue;
          const ev = JSON.parse(line.slice(6));
          if (ev.error) throw new Error(ev.error);
          if (ev.delta) a.textContent += ev.delta;
          if (ev.done && ev.conversation_id) {
            conversationId = ev.conversation_id;
            sessionStorage.setItem("conversation_id", conversationId);
          }
        }
      }
    }
  } catch (e) {
    u.remove();
    a.remove();
    $("err").textContent = String(e.message || e);
  } finally {
    busy = false;
    $("send").disabled = false;
  }
}

$("form").addEventListener("submit", (e) => {
  e.preventDefault();
  const p = $("prompt").value.trim();
  if (!p || busy) return;
  if (Number($("memory_k").value) < 0) { $("err").textContent = "memory_k must be >= 0"; return; }
  $("prompt").value = "";
  send(p);
});
$("reset").addEventListener("click", () => {
  conversationId = null;
  sessionStorage.removeItem("conversation_id");
  $("log").innerHTML = "";
});
</script>
</body>
</html>
)HTML";

}  // namespace lmforge
