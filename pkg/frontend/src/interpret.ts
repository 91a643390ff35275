/** Interpret tab: step a session through the compiled code with a live
 *  view of the machine. Every number and byte shown comes from the wire;
 *  a starved READ is presented as a feed prompt, not a failure. */
import { ErrorBody, SessionState, StepRecordRow, isError } from "./api.js";
import { el, fill } from "./dom.js";
import { ViewContext } from "./compiler.js";
import { hideBanner, staleBanner } from "./widgets.js";

export async function mountInterpret(container: HTMLElement,
                                     ctx: ViewContext): Promise<void> {
  let sessionId: string | null = null;

  const codeStatus = el("div", { id: "code-status" });
  const listing = el("pre", { id: "code-listing", "class": "listing" });

  const inputBox = el("input", {
    id: "session-input", type: "text", placeholder: "input integers",
  });
  const openButton = el("button", { id: "open-session" }, "Open session");
  const stepButton = el("button", { id: "step-1" }, "Step");
  const stepCount = el("input", { id: "step-count", type: "number", value: "10" });
  const stepNButton = el("button", { id: "step-n" }, "Step ×N");
  const runEndButton = el("button", { id: "run-to-end" }, "Run to end");
  const resetButton = el("button", { id: "reset-session" }, "Reset");
  for (const button of [stepButton, stepNButton, runEndButton, resetButton]) {
    button.disabled = true;
  }

  const banner = el("div", { "class": "banner", id: "interpret-banner" });
  banner.hidden = true;
  const trapBox = el("div", { id: "trap-box", "class": "trap" });
  trapBox.hidden = true;
  const feedPrompt = el("div", { id: "feed-prompt", "class": "feed-prompt" });
  feedPrompt.hidden = true;

  const stateLine = el("div", { id: "state-line" });
  const stackView = el("pre", { id: "stack-view" });
  const memoryView = el("table", { id: "memory-view", "class": "token-table" });
  const queueView = el("div", { id: "input-queue" });
  const feedBox = el("input", {
    id: "feed-box", type: "text", placeholder: "integers to feed",
  });
  const feedButton = el("button", { id: "feed-button" }, "Feed");
  const outputView = el("pre", { id: "output-view" });
  const traceView = el("pre", { id: "trace-view" });

  function renderState(state: SessionState, records: StepRecordRow[] = []): void {
    fill(stateLine,
         `pc: ${state.pc}  steps: ${state.steps}  halted: ${state.halted}` +
         `  trace: ${state.trace_len}${state.trace_truncated ? " (truncated)" : ""}`);
    stackView.textContent = JSON.stringify(state.stack);

    fill(memoryView, el("tr", {}, el("th", {}, "addr"), el("th", {}, "value")));
    for (const [addr, value] of Object.entries(state.memory)) {
      const changed = addr in state.changed_cells;
      memoryView.append(el("tr", { "class": changed ? "cell-changed" : "" },
                           el("td", {}, addr), el("td", {}, String(value))));
    }

    fill(queueView, `pending input: ${state.input_pending.join(" ")}`);
    outputView.textContent = state.output;

    for (const row of records) {
      traceView.append(JSON.stringify(row) + "\n");
    }
    traceView.scrollTop = traceView.scrollHeight;

    const lines = listing.querySelectorAll("div");
    lines.forEach((line, index) => {
      line.classList.toggle("current", index === state.pc);
    });

    if (state.trap === "InputExhausted") {
      trapBox.hidden = true;
      feedPrompt.hidden = false;
      fill(feedPrompt, `waiting for input – ${state.trap_message ?? ""}`);
    } else if (state.trap) {
      feedPrompt.hidden = true;
      trapBox.hidden = false;
      fill(trapBox, `${state.trap}: ${state.trap_message ?? ""}`);
    } else {
      feedPrompt.hidden = true;
      trapBox.hidden = true;
    }
  }

  async function doStep(n: number): Promise<void> {
    if (sessionId === null) return;
    const reply = await ctx.api.step(sessionId, n);
    if (reply.status === 409 && isError(reply.body)) {
      staleBanner(banner, (reply.body as ErrorBody).error.subfases ?? []);
      return;
    }
    hideBanner(banner);
    const stepped = reply.body as { records: StepRecordRow[]; state: SessionState };
    renderState(stepped.state, stepped.records);
  }

  openButton.addEventListener("click", async () => {
    const reply = await ctx.api.openSession(ctx.wsId, inputBox.value);
    if (reply.status === 409 && isError(reply.body)) {
      staleBanner(banner, (reply.body as ErrorBody).error.subfases ?? []);
      return;
    }
    hideBanner(banner);
    const opened = reply.body as { id: string; state: SessionState };
    sessionId = opened.id;
    for (const button of [stepButton, stepNButton, runEndButton, resetButton]) {
      button.disabled = false;
    }
    traceView.textContent = "";
    renderState(opened.state);
  });

  stepButton.addEventListener("click", () => doStep(1));
  stepNButton.addEventListener("click", () => doStep(Number(stepCount.value)));
  runEndButton.addEventListener("click", () => doStep(10_000_000));

  resetButton.addEventListener("click", async () => {
    if (sessionId === null) return;
    const reply = await ctx.api.reset(sessionId);
    if (reply.status === 409 && isError(reply.body)) {
      staleBanner(banner, (reply.body as ErrorBody).error.subfases ?? []);
      return;
    }
    hideBanner(banner);
    traceView.textContent = "";
    renderState((reply.body as { state: SessionState }).state);
  });

  feedButton.addEventListener("click", async () => {
    if (sessionId === null) return;
    const words = feedBox.value.trim().split(/\s+/).filter((w) => w !== "");
    const integers = words.map(Number);
    if (integers.some((n) => !Number.isInteger(n))) {
      feedBox.classList.add("invalid");
      return;
    }
    feedBox.classList.remove("invalid");
    const reply = await ctx.api.feed(sessionId, integers);
    if (isError(reply.body)) return;
    feedBox.value = "";
    renderState((reply.body as { state: SessionState }).state);
  });

  fill(container,
       el("section", { "class": "interpret-code" }, codeStatus, listing),
       el("section", { "class": "interpret-controls" },
          inputBox, openButton, stepButton, stepCount, stepNButton,
          runEndButton, resetButton),
       banner, trapBox, feedPrompt,
       el("section", { "class": "interpret-machine" },
          stateLine,
          el("h4", {}, "stack"), stackView,
          el("h4", {}, "memory"), memoryView,
          queueView, feedBox, feedButton,
          el("h4", {}, "output"), outputView,
          el("h4", {}, "trace"), traceView));

  const artifact = await ctx.api.artifact(ctx.wsId, "Code");
  fill(codeStatus, `Code: ${artifact.body.status}`);
  const text = artifact.body.payload?.["listing"];
  if (typeof text === "string") {
    fill(listing, ...text.replace(/\n$/, "").split("\n").map((line) =>
      el("div", { "class": "listing-line" }, line)));
  } else {
    fill(listing, "no machine code yet – run the program first");
  }
}
