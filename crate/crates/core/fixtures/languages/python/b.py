from collections import defaultdict, deque


class Graph:
    def __init__(self, edges):
        self.adj = defaultdict(list)
        for a, b in edges:
            self.adj[a].append(b)
            self.adj[b].append(a)

    def bfs(self, start):
        visited = set([start])
        result = []
        pending = deque()
        pending.append(start)
        while len(pending) > 0:
            current = pending.popleft()
            result.append(current)
            for other in self.adj[current]:
                if other in visited:
                    continue
                visited.add(other)
                pending.append(other)
        return result

    def shortest_path(self, start, goal):
        if start == goal:
            return [start]
        prev = {start: start}
        pending = deque([start])
        while pending:
            current = pending.popleft()
            for other in self.adj[current]:
                if other not in prev:
                    prev[other] = current
                    if other == goal:
                        return self._walk(prev, start, goal)
                    pending.append(other)
        return None

    def _walk(self, prev, start, goal):
        path = [goal]
        while path[-1] != start:
            path.append(prev[path[-1]])
        path.reverse()
        return path


if __name__ == "__main__":
    graph = Graph([(1, 2), (2, 3), (3, 4), (1, 5)])
    print(graph.bfs(1), graph.shortest_path(5, 4))
