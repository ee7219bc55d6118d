/** Incremental text/event-stream parser.
 *
 * The mining stream is opened with a POST, which `EventSource` cannot do,
 * so the response body is read manually and fed through this parser.
 */

export interface SseMessage {
  event: string;
  data: string;
}

export class SseParser {
  private buffer = "";

  /** Feed decoded text; returns every message completed by this chunk. */
  push(chunk: string): SseMessage[] {
    this.buffer += chunk.replace(/\r\n/g, "\n").replace(/\r/g, "\n");
    const messages: SseMessage[] = [];
    for (;;) {
      const boundary = this.buffer.indexOf("\n\n");
      if (boundary < 0) {
        return messages;
      }
      const block = this.buffer.slice(0, boundary);
      this.buffer = this.buffer.slice(boundary + 2);
      const message = parseBlock(block);
      if (message !== null) {
        messages.push(message);
      }
    }
  }
}

function parseBlock(block: string): SseMessage | null {
  let event = "message";
  const dataLines: string[] = [];
  let sawField = false;
  for (const line of block.split("\n")) {
    if (line === "" || line.startsWith(":")) {
      continue;
    }
    const colon = line.indexOf(":");
    const field = colon < 0 ? line : line.slice(0, colon);
    let value = colon < 0 ? "" : line.slice(colon + 1);
    if (value.startsWith(" ")) {
      value = value.slice(1);
    }
    if (field === "event") {
      event = value;
      sawField = true;
    } else if (field === "data") {
      dataLines.push(value);
      sawField = true;
    }
    // Other fields (id, retry) are irrelevant to this stream.
  }
  if (!sawField) {
    return null;
  }
  return { event, data: dataLines.join("\n") };
}

/** Iterate the messages of a streaming response body as they arrive. */
export async function* streamMessages(
  body: ReadableStream<Uint8Array>,
): AsyncGenerator<SseMessage> {
  const reader = body.getReader();
  const decoder = new TextDecoder();
  const parser = new SseParser();
  for (;;) {
    const { done, value } = await reader.read();
    if (done) {
      // A trailing partial block (no blank line) is discarded per the
      // event-stream format; the service always terminates blocks.
      return;
    }
    yield* parser.push(decoder.decode(value, { stream: true }));
  }
}
