import { VirtdocApi } from "./api.js";
import { HEIGHT_RANGE_M, WEIGHT_RANGE_KG } from "./frames.js";
import { MEASURE_WEIGHT, SessionFlow } from "./flow.js";

const DECISION_TEXT: Record<string, string> = {
  LowRisk: "Your diabetes risk appears low. No further testing is needed right now.",
  RecommendHbA1cTest:
    "Your result is in the uncertain range. An HbA1c blood test is recommended to confirm or rule out type 2 diabetes.",
  HighRiskSeePhysician:
    "Your risk appears high. Please see a physician for a thorough examination.",
};

const POLL_INTERVAL_MS = 1500;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export interface KioskApp {
  flow: SessionFlow;
  render: () => void;
  start: () => Promise<void>;
  sendAnswer: () => Promise<void>;
  sendMeasurement: () => Promise<void>;
  stopPolling: () => void;
  elements: {
    startButton: HTMLButtonElement;
    chatLog: HTMLDivElement;
    notice: HTMLDivElement;
    answerInput: HTMLInputElement;
    answerButton: HTMLButtonElement;
    weightInput: HTMLInputElement;
    heightInput: HTMLInputElement;
    measureButton: HTMLButtonElement;
    sensorPanel: HTMLDivElement;
    gauge: HTMLDivElement;
    gaugeFill: HTMLDivElement;
    decisionBanner: HTMLDivElement;
    errorBanner: HTMLDivElement;
  };
}

export function createKioskApp(root: HTMLElement, api: VirtdocApi): KioskApp {
  const flow = new SessionFlow(api);

  const container = el("div", "kiosk");
  const header = el("header", "kiosk-header");
  header.appendChild(el("h1", undefined, "Virtual Doctor"));
  const startButton = el("button", "start-button", "Start check-up");
  header.appendChild(startButton);

  const errorBanner = el("div", "banner banner-error hidden");
  const chatLog = el("div", "chat-log");
  const notice = el("div", "notice hidden");

  const inputRow = el("div", "input-row hidden");
  const answerInput = el("input", "answer-input");
  answerInput.placeholder = "Type your answer...";
  const answerButton = el("button", "answer-button", "Send");
  inputRow.append(answerInput, answerButton);

  const sensorPanel = el("div", "sensor-panel hidden");
  sensorPanel.appendChild(el("div", "sensor-title", "Simulated sensors"));
  const weightLabel = el("label", undefined, "Weight (kg)");
  const weightInput = el("input", "weight-input");
  weightInput.type = "number";
  weightInput.step = "0.1";
  weightInput.min = String(WEIGHT_RANGE_KG[0]);
  weightInput.max = String(WEIGHT_RANGE_KG[1]);
  weightInput.value = "86.2";
  weightLabel.appendChild(weightInput);
  const heightLabel = el("label", undefined, "Height (m)");
  const heightInput = el("input", "height-input");
  heightInput.type = "number";
  heightInput.step = "0.001";
  heightInput.min = String(HEIGHT_RANGE_M[0]);
  heightInput.max = String(HEIGHT_RANGE_M[1]);
  heightInput.value = "1.748";
  heightLabel.appendChild(heightInput);
  const measureButton = el("button", "measure-button", "Take measurement");
  sensorPanel.append(weightLabel, heightLabel, measureButton);

  const gauge = el("div", "gauge hidden");
  const gaugeFill = el("div", "gauge-fill");
  gauge.appendChild(gaugeFill);
  const gaugeCaption = el("div", "gauge-caption");
  const decisionBanner = el("div", "banner banner-decision hidden");

  container.append(header, errorBanner, chatLog, notice, inputRow,
                   sensorPanel, gauge, gaugeCaption, decisionBanner);
  root.appendChild(container);

  let timer: ReturnType<typeof setInterval> | null = null;

  function render(): void {
    const session = flow.state.session;
    const detail = flow.state.detail;

    errorBanner.classList.toggle("hidden", !flow.state.error);
    errorBanner.textContent = flow.state.error ?? "";

    notice.classList.toggle("hidden", !flow.state.notice);
    notice.textContent = flow.state.notice ?? "";

    chatLog.replaceChildren();
    if (detail) {
      for (const entry of detail.transcript) {
        chatLog.appendChild(el("div", "bubble doctor", entry.prompt));
        if (entry.input) chatLog.appendChild(el("div", "bubble patient", entry.input));
      }
    }
    if (session && !session.done) {
      chatLog.appendChild(el("div", "bubble doctor current", session.prompt));
    }

    startButton.classList.toggle("hidden", session !== null);
    const measuring = flow.atMeasurement;
    inputRow.classList.toggle("hidden", session === null || session.done || measuring);
    sensorPanel.classList.toggle("hidden", !measuring);
    if (measuring) {
      measureButton.textContent =
        flow.stage === MEASURE_WEIGHT ? "Step on the scale" : "Measure height";
    }

    const probability = session?.adjusted_probability ?? session?.base_probability ?? null;
    gauge.classList.toggle("hidden", probability === null);
    gaugeCaption.classList.toggle("hidden", probability === null);
    if (probability !== null) {
      gaugeFill.style.width = `${(probability * 100).toFixed(1)}%`;
      gaugeCaption.textContent = `Estimated probability: ${(probability * 100).toFixed(1)}%`;
    }

    const report = flow.state.report;
    decisionBanner.classList.toggle("hidden", report === null);
    if (report) {
      decisionBanner.textContent = DECISION_TEXT[report.decision] ?? report.decision;
      decisionBanner.dataset.decision = report.decision;
    }
  }

  async function start(): Promise<void> {
    await flow.start();
    await flow.refresh();
    render();
  }

  async function sendAnswer(): Promise<void> {
    const text = answerInput.value.trim();
    if (!text) return;
    answerInput.value = "";
    await flow.answer(text);
    await afterInput();
  }

  async function sendMeasurement(): Promise<void> {
    await flow.measure(Number(weightInput.value), Number(heightInput.value));
    await afterInput();
  }

  async function afterInput(): Promise<void> {
    await flow.refresh();
    if (flow.done) {
      await flow.loadReport();
      stopPolling();
    }
    render();
  }

  function poll(): void {
    if (!flow.state.session || flow.done) return;
    void flow.refresh().then(render);
  }

  function stopPolling(): void {
    if (timer !== null) {
      clearInterval(timer);
      timer = null;
    }
  }

  startButton.addEventListener("click", () => void start());
  answerButton.addEventListener("click", () => void sendAnswer());
  answerInput.addEventListener("keydown", (event) => {
    if (event.key === "Enter") void sendAnswer();
  });
  measureButton.addEventListener("click", () => void sendMeasurement());
  timer = setInterval(poll, POLL_INTERVAL_MS);

  return {
    flow,
    render,
    start,
    sendAnswer,
    sendMeasurement,
    stopPolling,
    elements: {
      startButton, chatLog, notice, answerInput, answerButton,
      weightInput, heightInput, measureButton, sensorPanel,
      gauge, gaugeFill, decisionBanner, errorBanner,
    },
  };
}
