import java.util.ArrayList;
import java.util.HashMap;
import java.util.List;
import java.util.Map;

public class Inventory {
    private final Map<String, Integer> stock = new HashMap<>();
    private final List<String> log = new ArrayList<>();

    public void add(String item, int count) {
        if (count <= 0) {
            throw new IllegalArgumentException("count must be positive");
        }
        int current = stock.getOrDefault(item, 0);
        stock.put(item, current + count);
        log.add("add " + item + " " + count);
    }

    public boolean remove(String item, int count) {
        Integer current = stock.get(item);
        if (current == null || current < count) {
            return false;
        }
        if (current == count) {
            stock.remove(item);
        } else {
            stock.put(item, current - count);
        }
        log.add("remove " + item + " " + count);
        return true;
    }

    public int total() {
        int sum = 0;
        for (int value : stock.values()) {
            sum += value;
        }
        return sum;
    }

    public List<String> history() {
        return new ArrayList<>(log);
    }

    public static void main(String[] args) {
        Inventory inv = new Inventory();
        inv.add("apple", 3);
        inv.add("pear", 2);
        inv.remove("apple", 1);
        System.out.println(inv.total());
    }
}
