export interface Task {
  readonly id: number;
  title: string;
  done: boolean;
  tags: Set<string>;
}

export class TaskList {
  private readonly tasks = new Map<number, Task>();
  private counter = 0;

  add(title: string, ...tags: string[]): Task {
    this.counter += 1;
    const task: Task = {
      id: this.counter,
      title: title.trim(),
      done: false,
      tags: new Set(tags),
    };
    this.tasks.set(task.id, task);
    return task;
  }

  complete(id: number): boolean {
    const task = this.tasks.get(id);
    if (task === undefined) return false;
    if (task.done) return false;
    task.done = true;
    return true;
  }

  pending(): Task[] {
    return [...this.tasks.values()].filter((task) => !task.done);
  }

  byTag(tag: string): Task[] {
    const out: Task[] = [];
    this.tasks.forEach((task) => {
      if (task.tags.has(tag)) out.push(task);
    });
    return out;
  }

  summary(): Map<string, number> {
    const counts = new Map<string, number>();
    this.tasks.forEach((task) =>
      task.tags.forEach((tag) => counts.set(tag, (counts.get(tag) || 0) + 1)),
    );
    return counts;
  }
}

const list = new TaskList();
list.add("write tests", "dev");
console.log(list.complete(1), list.pending().length);
